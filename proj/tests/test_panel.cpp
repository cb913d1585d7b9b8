#include "doctest.h"
#include "helpers.hpp"

#include "lowfreq/filters.hpp"
#include "lowfreq/panel.hpp"

#include <cmath>

using namespace lowfreq;
using namespace lowfreq::panel;

namespace {

Panel make_panel(const Eigen::MatrixXd& m, int first_year = 2000) {
    return Panel(testing::unit_names(m.rows()), first_year, m);
}

// Least-squares dummy-variable regression on unit (and optionally year) dummies.
Eigen::VectorXd lsdv(const Eigen::MatrixXd& y, const std::vector<Eigen::MatrixXd>& xs, bool years) {
    const Eigen::Index N = y.rows();
    const Eigen::Index T = y.cols();
    const Eigen::Index k = static_cast<Eigen::Index>(xs.size());
    const Eigen::Index cols = k + N + (years ? T - 1 : 0);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(N * T, cols);
    Eigen::VectorXd v(N * T);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index t = 0; t < T; ++t) {
            const Eigen::Index row = i * T + t;
            v(row) = y(i, t);
            for (Eigen::Index j = 0; j < k; ++j) d(row, j) = xs[static_cast<std::size_t>(j)](i, t);
            d(row, k + i) = 1.0;
            if (years && t > 0) d(row, k + N + t - 1) = 1.0;
        }
    }
    return d.colPivHouseholderQr().solve(v).head(k);
}

}  // namespace

TEST_CASE("FE recovers an exact relation") {
    const Eigen::MatrixXd l = testing::random_matrix(6, 12, 1);
    const Eigen::VectorXd gamma = testing::random_vector(6, 2);
    const Eigen::MatrixXd y = gamma.replicate(1, 12) + 2.0 * l;
    const PanelEstimate est = fe_estimate(static_spec(make_panel(y), make_panel(l), std::nullopt,
                                                      Heterogeneity::FE));
    CHECK(std::abs(est.coefficient("beta_L") - 2.0) <= 1e-10);
    CHECK(testing::max_abs(est.unit_effects - gamma) <= 1e-10);
    CHECK(est.ssr <= 1e-20);
}

TEST_CASE("FE and AFE match dummy-variable OLS on a 4x5 panel") {
    const Eigen::MatrixXd y = testing::random_matrix(4, 5, 3);
    const Eigen::MatrixXd l = testing::random_matrix(4, 5, 4);
    const Eigen::MatrixXd h = testing::random_matrix(4, 5, 5);
    const Eigen::VectorXd fe_oracle = lsdv(y, {l, h}, false);
    const Eigen::VectorXd afe_oracle = lsdv(y, {l, h}, true);
    const PanelEstimate fe = fe_estimate(static_spec(make_panel(y), make_panel(l), make_panel(h),
                                                     Heterogeneity::FE));
    const PanelEstimate afe = afe_estimate(static_spec(make_panel(y), make_panel(l), make_panel(h),
                                                       Heterogeneity::AFE));
    CHECK(testing::max_abs(fe.coefficients - fe_oracle) <= 1e-10);
    CHECK(testing::max_abs(afe.coefficients - afe_oracle) <= 1e-10);

    SUBCASE("residuals are orthogonal to regressors and effects") {
        const Eigen::MatrixXd xt = afe.design;
        Eigen::VectorXd u(20);
        for (int i = 0; i < 4; ++i) u.segment(i * 5, 5) = afe.residuals.row(i).transpose();
        CHECK(testing::max_abs(xt.transpose() * u) <= 1e-8);
        CHECK(testing::max_abs(afe.residuals.rowwise().sum()) <= 1e-8);
        CHECK(testing::max_abs(afe.residuals.colwise().sum()) <= 1e-8);
        CHECK(testing::max_abs(fe.residuals.rowwise().sum()) <= 1e-8);
    }
}

TEST_CASE("AFE") {
    const Eigen::MatrixXd h = testing::random_matrix(5, 8, 6);
    const Eigen::VectorXd gamma = testing::random_vector(5, 7);
    const Eigen::VectorXd xi = testing::random_vector(8, 8);
    const Eigen::MatrixXd y = gamma.replicate(1, 8) + xi.transpose().replicate(5, 1) + 1.5 * h;

    SUBCASE("recovers the slope") {
        PanelSpec spec{make_panel(y), {{"beta_H", make_panel(h)}}, Heterogeneity::AFE};
        CHECK(std::abs(afe_estimate(spec).coefficient("beta_H") - 1.5) <= 1e-10);
    }
    SUBCASE("invariant to unit- and year-constant shifts of the regressand") {
        const Eigen::MatrixXd noisy = y + testing::random_matrix(5, 8, 9);
        PanelSpec a{make_panel(noisy), {{"beta_H", make_panel(h)}}, Heterogeneity::AFE};
        const Eigen::MatrixXd shifted = noisy + testing::random_vector(5, 10).replicate(1, 8) +
                                        testing::random_vector(8, 11).transpose().replicate(5, 1);
        PanelSpec b{make_panel(shifted), {{"beta_H", make_panel(h)}}, Heterogeneity::AFE};
        CHECK(std::abs(afe_estimate(a).coefficients(0) - afe_estimate(b).coefficients(0)) <= 1e-10);
    }
    SUBCASE("a regressor constant across units is absorbed") {
        const Eigen::MatrixXd common = testing::random_vector(8, 12).transpose().replicate(5, 1);
        PanelSpec spec{make_panel(y), {{"beta_L", make_panel(common)}}, Heterogeneity::AFE};
        CHECK_THROWS_WITH_AS(afe_estimate(spec), doctest::Contains("RankDeficientDesign"), Error);
    }
    SUBCASE("a regressor constant over time is absorbed by FE") {
        const Eigen::MatrixXd level = testing::random_vector(5, 13).replicate(1, 8);
        PanelSpec spec{make_panel(y), {{"beta_L", make_panel(level)}}, Heterogeneity::FE};
        CHECK_THROWS_WITH_AS(fe_estimate(spec), doctest::Contains("RankDeficientDesign"), Error);
    }
}

TEST_CASE("IFE exact factor structure") {
    const int N = 48;
    const int T = 60;
    const Eigen::MatrixXd l = testing::random_matrix(N, T, 14);
    const Eigen::VectorXd gamma = testing::random_vector(N, 15);
    const Eigen::VectorXd lambda = testing::random_vector(N, 16).array() + 1.0;
    const Eigen::VectorXd f = testing::random_walk(T, 17);
    const Eigen::MatrixXd y = gamma.replicate(1, T) + lambda * f.transpose() - 1.0 * l;
    const PanelEstimate est = ife_estimate(static_spec(make_panel(y), make_panel(l), std::nullopt,
                                                       Heterogeneity::IFE));
    CHECK(est.converged);
    CHECK(std::abs(est.coefficient("beta_L") + 1.0) <= 1e-6);
    for (std::size_t k = 1; k < est.ssr_path.size(); ++k) {
        CHECK(est.ssr_path[k] <= est.ssr_path[k - 1] * (1.0 + 1e-12) + 1e-18);
    }
    const Eigen::MatrixXd ff = est.factors * est.factors.transpose() / T;
    CHECK(std::abs(ff(0, 0) - 1.0) <= 1e-8);

    SUBCASE("the iteration cap is reported rather than thrown") {
        const Eigen::MatrixXd noisy = y + testing::random_matrix(N, T, 18);
        IfeOptions once;
        once.max_iterations = 1;
        const PanelEstimate capped = ife_estimate(static_spec(make_panel(noisy), make_panel(l),
                                                              std::nullopt, Heterogeneity::IFE),
                                                  once);
        CHECK_FALSE(capped.converged);
        CHECK(capped.iterations == 1);
    }
}

TEST_CASE("IFE SSR is non-increasing on noisy data") {
    const int N = 20;
    const int T = 30;
    const Eigen::MatrixXd l = testing::random_matrix(N, T, 19);
    const Eigen::MatrixXd h = testing::random_matrix(N, T, 20);
    const Eigen::VectorXd lambda = testing::random_vector(N, 21);
    const Eigen::VectorXd f = testing::random_walk(T, 22);
    const Eigen::MatrixXd y =
        lambda * f.transpose() + 0.5 * l - 0.2 * h + testing::random_matrix(N, T, 23);
    const PanelEstimate est = ife_estimate(static_spec(make_panel(y), make_panel(l), make_panel(h),
                                                       Heterogeneity::IFE));
    REQUIRE(est.ssr_path.size() >= 2);
    for (std::size_t k = 1; k < est.ssr_path.size(); ++k) {
        CHECK(est.ssr_path[k] <= est.ssr_path[k - 1] * (1.0 + 1e-12));
    }
    CHECK(est.ssr == doctest::Approx(est.ssr_path.back()).epsilon(1e-9));
}

TEST_CASE("FWL identity for MW components") {
    const int N = 6;
    const int T = 60;
    const int q = 4;
    const Eigen::MatrixXd x = testing::random_matrix(N, T, 24);
    const Eigen::MatrixXd dy = testing::random_matrix(N, T, 25);
    Eigen::MatrixXd low_x(N, T);
    Eigen::MatrixXd low_y(N, T);
    for (int i = 0; i < N; ++i) {
        low_x.row(i) = filters::mw_decompose(TimeSeries("u", 1964, x.row(i).transpose()), q).low.values();
        low_y.row(i) = filters::mw_decompose(TimeSeries("u", 1964, dy.row(i).transpose()), q).low.values();
    }
    const double a = fe_estimate(static_spec(make_panel(dy), make_panel(low_x), std::nullopt,
                                             Heterogeneity::FE)).coefficients(0);
    const double b = fe_estimate(static_spec(make_panel(low_y), make_panel(low_x), std::nullopt,
                                             Heterogeneity::FE)).coefficients(0);
    CHECK(std::abs(a - b) <= 1e-8);
}

TEST_CASE("dynamic spec layout") {
    Eigen::MatrixXd dy(2, 4);
    dy << 1, 2, 3, 4, 5, 6, 7, 8;
    Eigen::MatrixXd low(2, 5);
    low << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0;
    Eigen::MatrixXd high(2, 5);
    high << 1, 4, 9, 16, 25, 2, 3, 5, 7, 11;
    const Panel y(testing::unit_names(2), 2001, dy);
    const Panel l(testing::unit_names(2), 2000, low);
    const Panel h(testing::unit_names(2), 2000, high);
    const PanelSpec spec = dynamic_spec(y, l, h, Heterogeneity::FE);
    CHECK(spec.dependent.first_year() == 2002);
    CHECK(spec.dependent.T() == 3);
    CHECK(spec.names() == std::vector<std::string>{"alpha", "b_L", "delta_H", "gamma_H"});
    // Unit 0, year 2002: lag dY = 1, L = 0.3, dH = 9 - 4, lag H = 4.
    CHECK(spec.regressors[0].values.values()(0, 0) == 1.0);
    CHECK(spec.regressors[1].values.values()(0, 0) == doctest::Approx(0.3));
    CHECK(spec.regressors[2].values.values()(0, 0) == 5.0);
    CHECK(spec.regressors[3].values.values()(0, 0) == 4.0);
    CHECK(spec.regressors[2].values.values()(1, 2) == 4.0);
}

TEST_CASE("long_run_effect") {
    CHECK(long_run_effect(-0.4, 0.0) == -0.4);
    CHECK(long_run_effect(-1.0, 0.5) == doctest::Approx(-2.0));
    // Cumulated response of y_t = alpha y_{t-1} + b x_t to a permanent unit step in x.
    const double b = -0.446;
    const double alpha = 0.31;
    double y = 0.0;
    for (int t = 0; t < 400; ++t) y = alpha * y + b;
    CHECK(std::abs(long_run_effect(b, alpha) - y) <= 1e-10);
    CHECK_THROWS_WITH_AS((void)long_run_effect(1.0, 1.0), doctest::Contains("ExplosiveDynamics"), Error);
    CHECK_THROWS_AS((void)long_run_effect(1.0, -1.2), Error);
}

TEST_CASE("marginal effects on a toy fit") {
    Eigen::MatrixXd low(2, 3);
    low << 1, 2, 3, 3, 4, 5;
    Eigen::MatrixXd high(2, 3);
    high << 0.5, -0.5, 1.0, 1.5, 0.5, 0.0;
    const Eigen::MatrixXd dy = testing::random_matrix(2, 3, 26);
    const PanelSpec spec = interaction_spec(make_panel(dy), make_panel(low), make_panel(high),
                                            Heterogeneity::FE);
    Eigen::Vector3d coef(-0.5, 0.2, -0.1);
    const MarginalEffects me = marginal_effects(coef, spec.names(), spec);
    // Column means: L = (2, 3, 4), H = (1, 0, 0.5).
    CHECK(me.high(0) == doctest::Approx(0.2 - 0.1 * 2));
    CHECK(me.high(2) == doctest::Approx(0.2 - 0.1 * 4));
    CHECK(me.low(0) == doctest::Approx(-0.5 - 0.1 * 1));
    CHECK(me.low(1) == doctest::Approx(-0.5));
    CHECK(spec.regressors[2].values.values()(1, 0) == doctest::Approx(4.5));
}

TEST_CASE("nonlinear fit with no interaction in the data") {
    const int N = 30;
    const int T = 40;
    const Eigen::MatrixXd l = testing::random_matrix(N, T, 27);
    const Eigen::MatrixXd h = testing::random_matrix(N, T, 28);
    const Eigen::VectorXd lambda = testing::random_vector(N, 29);
    const Eigen::VectorXd f = testing::random_vector(T, 30);
    const Eigen::MatrixXd y = lambda * f.transpose() - 0.8 * l + 0.3 * h + 0.1 * testing::random_matrix(N, T, 31);
    const NonlinearEstimate nl = nonlinear_estimate(
        interaction_spec(make_panel(y), make_panel(l), make_panel(h), Heterogeneity::IFE));
    CHECK(std::abs(nl.estimate.coefficient("beta_HL")) < 0.05);
    const double spread = nl.effects.high.maxCoeff() - nl.effects.high.minCoeff();
    CHECK(spread < 0.05);
    CHECK(std::abs(nl.effects.high.mean() - 0.3) < 0.05);
}
