#pragma once

#include "lowfreq/inference.hpp"
#include "lowfreq/series.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace lowfreq::tsreg {

struct TsOptions {
    double level = 0.90;
    int bandwidth = -1;  ///< Newey-West lags; negative selects floor(0.75 T^{1/3})
    int dols = 0;        ///< leads and lags of the differenced low component
};

struct TsEstimate {
    std::string unit_id;
    std::vector<std::string> names;  ///< beta_0, beta_L[, beta_H][, dL(+j)...]
    Eigen::VectorXd coefficients;
    Eigen::VectorXd se;
    std::vector<inference::Interval> ci;
    double level = 0.90;
    int bandwidth = 0;
    int first_year = 0;  ///< first year of the estimation sample
    Eigen::Index T = 0;
    Eigen::VectorXd residuals;
    double r_squared = 0.0;
    double durbin_watson = 0.0;

    [[nodiscard]] double coefficient(const std::string& name) const;
    [[nodiscard]] inference::Interval interval(const std::string& name) const;
};

/// Standard normal quantile.
[[nodiscard]] double normal_quantile(double p);

/**
 * OLS of dy on a constant, lx and optionally hx, with Newey-West standard
 * errors and symmetric normal intervals. All inputs must share one year
 * axis (AxisMismatch otherwise) with at least 20 years.
 */
[[nodiscard]] TsEstimate ts_estimate(const TimeSeries& dy, const TimeSeries& lx,
                                     const std::optional<TimeSeries>& hx = std::nullopt,
                                     const TsOptions& options = {});

/// ts_estimate for every unit of matching panels.
[[nodiscard]] std::vector<TsEstimate> unit_estimates(const Panel& dy, const Panel& lx,
                                                     const std::optional<Panel>& hx = std::nullopt,
                                                     const TsOptions& options = {},
                                                     int threads = 1);

struct Density {
    std::vector<double> grid;
    std::vector<double> f;
    double bandwidth = 0.0;
    double median = 0.0;
    double mode = 0.0;
    double mean = 0.0;
    double weighted_mean = 0.0;  ///< equals mean when no weights are supplied
    std::size_t n = 0;
    bool degenerate = false;     ///< all estimates equal; grid and f are empty
};

/**
 * Gaussian kernel density with bandwidth 0.9 min(sd, IQR/1.34) n^{-1/5}
 * evaluated on 512 points over [min - 3bw, max + 3bw]. The mode is the grid
 * argmax. Throws TooFewEstimates for fewer than five values.
 */
[[nodiscard]] Density unit_density(const std::vector<double>& estimates,
                                   const std::optional<Eigen::VectorXd>& weights = std::nullopt);

}  // namespace lowfreq::tsreg
