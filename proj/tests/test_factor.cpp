#include "doctest.h"
#include "helpers.hpp"

#include "lowfreq/factor.hpp"
#include "lowfreq/filters.hpp"

#include <algorithm>
#include <cmath>

using namespace lowfreq;
using namespace lowfreq::factor;

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

}  // namespace

TEST_CASE("first_pc on a homogeneous panel") {
    const Eigen::VectorXd f = testing::random_vector(20, 1);
    const Eigen::MatrixXd m = Eigen::VectorXd::Ones(4) * f.transpose();
    const FactorModel model = first_pc(Panel(testing::unit_names(4), 2000, m));
    const Eigen::VectorXd est = model.factors.row(0).transpose();
    CHECK(correlation(est, f) == doctest::Approx(1.0));
    CHECK(model.loadings.col(0).maxCoeff() - model.loadings.col(0).minCoeff() < 1e-12);
    CHECK(est.squaredNorm() / 20.0 == doctest::Approx(1.0));
}

TEST_CASE("exact rank-one panel has unit communalities") {
    const Eigen::VectorXd f = testing::random_vector(30, 2);
    const Eigen::VectorXd lambda = testing::random_vector(6, 3);
    const FactorModel model = first_pc(Panel(testing::unit_names(6), 2000, lambda * f.transpose()));
    CHECK(testing::max_abs(model.communalities.array() - 1.0) <= 1e-10);
    CHECK(testing::max_abs(model.residuals) <= 1e-10);
}

TEST_CASE("first_pc matches a dense eigensolver up to sign") {
    const Eigen::MatrixXd x = testing::random_matrix(5, 10, 4);
    const FactorModel model = first_pc(Panel(testing::unit_names(5), 2000, x));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
    const Eigen::VectorXd v = eig.eigenvectors().col(9) * std::sqrt(10.0);
    const Eigen::VectorXd est = model.factors.row(0).transpose();
    CHECK(std::min(testing::max_abs(est - v), testing::max_abs(est + v)) <= 1e-10);
    // Sign rule: nonnegative correlation with the cross-sectional mean.
    CHECK(correlation(est, x.colwise().mean().transpose()) >= 0.0);
    // Normalization.
    CHECK(std::abs(est.squaredNorm() / 10.0 - 1.0) < 1e-8);
}

TEST_CASE("first_pc is exactly invariant to unit order") {
    const Eigen::MatrixXd x = testing::random_matrix(7, 15, 5);
    const Panel p(testing::unit_names(7), 2000, x);
    const std::vector<std::string> shuffled{"u03", "u06", "u00", "u05", "u01", "u04", "u02"};
    const Panel q = p.select_units(shuffled);
    const FactorModel a = first_pc(p);
    const FactorModel b = first_pc(q);
    CHECK((a.factors.array() == b.factors.array()).all());
    for (std::size_t k = 0; k < shuffled.size(); ++k) {
        CHECK(b.loadings(static_cast<Eigen::Index>(k), 0) == a.loadings(*a.index_of(shuffled[k]), 0));
    }
}

TEST_CASE("loadings scale with a unit's data") {
    const Eigen::VectorXd f = testing::random_vector(25, 6);
    const Eigen::VectorXd lambda = testing::random_vector(5, 7).cwiseAbs().array() + 0.5;
    Eigen::MatrixXd x = lambda * f.transpose();
    const FactorModel base = first_pc(Panel(testing::unit_names(5), 2000, x));
    x.row(2) *= 3.0;
    const FactorModel scaled = first_pc(Panel(testing::unit_names(5), 2000, x));
    CHECK(scaled.loadings(2, 0) == doctest::Approx(3.0 * base.loadings(2, 0)));
}

TEST_CASE("all-zero panel is degenerate") {
    CHECK_THROWS_WITH_AS(first_pc(Panel(testing::unit_names(3), 2000, Eigen::MatrixXd::Zero(3, 8))),
                         doctest::Contains("DegenerateRank"), Error);
}

TEST_CASE("lowfreq_factor_model") {
    SUBCASE("identical units") {
        const Eigen::VectorXd f = testing::random_walk(60, 8);
        const Eigen::VectorXd g = testing::random_vector(60, 9);
        const Panel x(testing::unit_names(5), 1964, Eigen::VectorXd::Ones(5) * f.transpose());
        const Panel y(testing::unit_names(5), 1964, Eigen::VectorXd::Ones(5) * g.transpose());
        const auto [mx, my] = lowfreq_factor_model(x, y, 4);
        CHECK(mx.factors.cols() == 4);
        CHECK(mx.loadings.col(0).maxCoeff() - mx.loadings.col(0).minCoeff() < 1e-12);
        CHECK(my.loadings.col(0).maxCoeff() - my.loadings.col(0).minCoeff() < 1e-12);
        CHECK(testing::max_abs(mx.residuals) < 1e-12);
        CHECK(testing::max_abs(my.residuals) < 1e-12);
        CHECK(testing::max_abs(mean_one_loadings(mx).array() - 1.0) < 1e-12);
    }
    SUBCASE("recovers a low-frequency factor") {
        const int N = 48;
        const int T = 60;
        const int q = 4;
        const Eigen::MatrixXd psi = filters::cosine_basis(T, q);
        std::vector<double> corrs;
        for (std::uint64_t rep = 0; rep < 100; ++rep) {
            RngStream rng(31, rep);
            const Eigen::VectorXd f = testing::random_walk(T, 32, rep) * 0.2;
            Eigen::MatrixXd x(N, T);
            for (int i = 0; i < N; ++i) {
                const double lambda = 1.0 + 0.25 * rng.normal();
                for (int t = 0; t < T; ++t) x(i, t) = lambda * f(t) + rng.normal();
            }
            const Panel px(testing::unit_names(N), 1964, x);
            const auto [mx, my] = lowfreq_factor_model(px, px, q);
            const Eigen::VectorXd truth = psi.transpose() * f / T;
            corrs.push_back(correlation(mx.factors.row(0).transpose(), truth));
        }
        std::sort(corrs.begin(), corrs.end());
        CHECK(0.5 * (corrs[49] + corrs[50]) >= 0.95);
    }
    SUBCASE("mismatched axes") {
        const Panel x(testing::unit_names(3), 1964, testing::random_matrix(3, 20, 1));
        const Panel y(testing::unit_names(3), 1965, testing::random_matrix(3, 20, 2));
        CHECK_THROWS_WITH_AS(lowfreq_factor_model(x, y, 4), doctest::Contains("IncompatibleAxes"), Error);
    }
}

TEST_CASE("common_idio_split") {
    const int T = 60;
    const int q = 4;
    const Eigen::VectorXd w = normalize_weights(Eigen::VectorXd::LinSpaced(6, 1, 6));

    SUBCASE("rank-one panel has no idiosyncratic part") {
        const Eigen::VectorXd f = testing::random_walk(T, 10);
        const Eigen::VectorXd lambda = testing::random_vector(6, 11).array() + 2.0;
        const Panel x(testing::unit_names(6), 1964, lambda * f.transpose(), w);
        const auto [mx, my] = lowfreq_factor_model(x, x, q);
        for (Eigen::Index i = 0; i < 6; ++i) {
            const CommonIdiosyncraticSplit s = common_idio_split(x.unit(i), mx, q);
            CHECK(testing::max_abs(s.idiosyncratic.values()) <= 1e-8);
        }
        const CommonIdiosyncraticSplit agg = common_idio_split(weighted_aggregate(x), mx, q);
        CHECK(testing::max_abs(agg.idiosyncratic.values()) <= 1e-8);
    }
    SUBCASE("random panel is additive") {
        const Panel x(testing::unit_names(6), 1964, testing::random_matrix(6, T, 12), w);
        const auto [mx, my] = lowfreq_factor_model(x, x, q);
        const CommonIdiosyncraticSplit s = common_idio_split(x.unit(3), mx, q);
        CHECK(testing::max_abs(s.common.values() + s.idiosyncratic.values() - s.low.values()) <= 1e-10);
    }
    SUBCASE("zero loading leaves only the mean as common") {
        const Panel x(testing::unit_names(6), 1964, testing::random_matrix(6, T, 13), w);
        const auto [mx, my] = lowfreq_factor_model(x, x, q);
        const TimeSeries u = x.unit(0);
        const CommonIdiosyncraticSplit s = common_idio_split(u, mx, q, 0.0);
        CHECK(testing::max_abs(s.common.values().array() - u.values().mean()) < 1e-12);
        CHECK(testing::max_abs(s.idiosyncratic.values() - s.mean_deviation.values()) < 1e-12);
    }
    SUBCASE("unknown unit") {
        const Panel x(testing::unit_names(6), 1964, testing::random_matrix(6, T, 14), w);
        const auto [mx, my] = lowfreq_factor_model(x, x, q);
        CHECK_THROWS_WITH_AS(common_idio_split(x.unit(0).with_unit_id("zz"), mx, q),
                             doctest::Contains("IncompatibleAxes"), Error);
        CHECK_THROWS_AS(common_idio_split(x.unit(0), mx, 5), Error);
    }
}
