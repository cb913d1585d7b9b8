#include "doctest.h"
#include "helpers.hpp"

#include "lowfreq/filters.hpp"
#include "lowfreq/tsreg.hpp"

#include <cmath>

using namespace lowfreq;
using namespace lowfreq::tsreg;

namespace {

TimeSeries series(const Eigen::VectorXd& v, int first = 1964) { return TimeSeries("x", first, v); }

}  // namespace

TEST_CASE("normal quantiles") {
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    CHECK(normal_quantile(0.84) == doctest::Approx(0.9944578832097497).epsilon(1e-12));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
    CHECK_THROWS_AS((void)normal_quantile(1.0), Error);
}

TEST_CASE("ts_estimate matches OLS with Newey-West intervals") {
    const Eigen::Index T = 60;
    const Eigen::VectorXd l = testing::random_walk(T, 1);
    const Eigen::VectorXd h = testing::random_vector(T, 2);
    const Eigen::VectorXd y = (0.3 - 0.5 * l.array() + 0.2 * h.array()).matrix() + testing::random_vector(T, 3);
    const TsEstimate est = ts_estimate(series(y), series(l), series(h));

    Eigen::MatrixXd x(T, 3);
    x << Eigen::VectorXd::Ones(T), l, h;
    const Eigen::VectorXd beta = testing::normal_equations(x, y);
    CHECK(testing::max_abs(est.coefficients - beta) <= 1e-10);
    const Eigen::VectorXd se = inference::newey_west_se(x, y - x * beta, 2).se;
    CHECK(est.bandwidth == 2);
    CHECK(testing::max_abs(est.se - se) <= 1e-12);
    const inference::Interval ci = est.interval("beta_L");
    CHECK(ci.lo == doctest::Approx(beta(1) - 1.6448536269514722 * se(1)).epsilon(1e-12));
    CHECK(ci.hi == doctest::Approx(beta(1) + 1.6448536269514722 * se(1)).epsilon(1e-12));
    CHECK(est.first_year == 1964);
    CHECK(est.durbin_watson > 0.0);
}

TEST_CASE("low-pass regressand and orthogonal regressor leave beta_L unchanged") {
    const Eigen::Index T = 60;
    const TimeSeries x = series(testing::random_walk(T, 4));
    const TimeSeries dy = series(testing::random_vector(T, 5) - 0.4 * x.values());
    for (int q : {4, 8, 12}) {
        const Decomposition dx = filters::mw_decompose(x, q);
        const Decomposition ddy = filters::mw_decompose(dy, q);
        const double direct = ts_estimate(dy, dx.low).coefficient("beta_L");
        const double filtered = ts_estimate(ddy.low, dx.low).coefficient("beta_L");
        const double with_high = ts_estimate(dy, dx.low, dx.high).coefficient("beta_L");
        CHECK(std::abs(direct - filtered) <= 1e-8);
        CHECK(std::abs(direct - with_high) <= 1e-8);
    }
}

TEST_CASE("ts_estimate validation") {
    const Eigen::VectorXd v = testing::random_vector(30, 6);
    CHECK_THROWS_WITH_AS((void)ts_estimate(series(v), series(v, 1965)), doctest::Contains("AxisMismatch"), Error);
    CHECK_THROWS_WITH_AS((void)ts_estimate(series(v.head(19)), series(v.head(19))),
                         doctest::Contains("SampleTooShort"), Error);
    TsOptions o;
    o.dols = 2;
    const TsEstimate est = ts_estimate(series(testing::random_vector(30, 7)), series(testing::random_walk(30, 8)),
                                       std::nullopt, o);
    CHECK(est.names.size() == 7);
    CHECK(est.names.back() == "dL(+2)");
    CHECK(est.T == 25);
    CHECK(est.first_year == 1967);
}

TEST_CASE("unit estimates loop over panels") {
    const Eigen::MatrixXd l = testing::random_matrix(4, 30, 9);
    const Eigen::MatrixXd y = testing::random_matrix(4, 30, 10) + 2.0 * l;
    const Panel py(testing::unit_names(4), 1990, y);
    const Panel pl(testing::unit_names(4), 1990, l);
    const auto a = unit_estimates(py, pl, std::nullopt, {}, 1);
    const auto b = unit_estimates(py, pl, std::nullopt, {}, 3);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a[i].coefficient("beta_L") == b[i].coefficient("beta_L"));
        CHECK(a[i].unit_id == testing::unit_names(4)[i]);
        CHECK(std::abs(a[i].coefficient("beta_L") - 2.0) < 0.6);
    }
}

TEST_CASE("unit density") {
    SUBCASE("Silverman bandwidth and summary statistics") {
        const std::vector<double> e{-1.0, -0.5, 0.0, 0.2, 0.4, 1.5};
        const Density d = unit_density(e);
        // Hand computation: sd, type-7 IQR, n^{-1/5}.
        double m = 0.0;
        for (double x : e) m += x;
        m /= 6.0;
        double ss = 0.0;
        for (double x : e) ss += (x - m) * (x - m);
        const double sd = std::sqrt(ss / 5.0);
        const double iqr = (0.4 - 0.05) - (-0.5 + 0.25 * 0.5);
        const double bw = 0.9 * std::min(sd, iqr / 1.34) * std::pow(6.0, -0.2);
        CHECK(d.bandwidth == doctest::Approx(bw).epsilon(1e-12));
        CHECK(d.median == doctest::Approx(0.1));
        CHECK(d.mean == doctest::Approx(m));
        CHECK(d.weighted_mean == doctest::Approx(m));
        CHECK(d.grid.size() == 512);
        CHECK(d.grid.front() == doctest::Approx(-1.0 - 3.0 * bw));
        CHECK(d.grid.back() == doctest::Approx(1.5 + 3.0 * bw));
        double area = 0.0;
        for (std::size_t g = 1; g < d.grid.size(); ++g) {
            area += 0.5 * (d.f[g] + d.f[g - 1]) * (d.grid[g] - d.grid[g - 1]);
        }
        CHECK(area == doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("mode of a large normal sample is near its center") {
        const Eigen::VectorXd v = testing::random_vector(2000, 11);
        const Density d = unit_density(std::vector<double>(v.data(), v.data() + v.size()));
        CHECK(std::abs(d.mode) < 0.2);
    }
    SUBCASE("weighted mean") {
        const std::vector<double> e{1.0, 2.0, 3.0, 4.0, 5.0};
        Eigen::VectorXd w(5);
        w << 0.0, 0.0, 0.0, 1.0, 3.0;
        CHECK(unit_density(e, w).weighted_mean == doctest::Approx(4.75));
    }
    SUBCASE("equal estimates") {
        const Density d = unit_density(std::vector<double>(7, -0.3));
        CHECK(d.degenerate);
        CHECK(d.median == -0.3);
        CHECK(d.mode == -0.3);
        CHECK(d.mean == -0.3);
    }
    SUBCASE("too few") {
        CHECK_THROWS_WITH_AS((void)unit_density({1.0, 2.0, 3.0, 4.0}), doctest::Contains("TooFewEstimates"), Error);
    }
}
