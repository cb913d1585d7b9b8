#pragma once

#include "lowfreq/series.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace lowfreq::synthetic {

/// Settings of the synthetic state panel used for demos and Monte Carlo calibration.
struct SyntheticOptions {
    std::uint64_t seed = 20240601;
    int first_year = 1895;
    int last_year = 2023;
    int growth_first_year = 1964;
    int cutoff = 1980;

    // Temperature components (degF)
    double common_sigma_L = 0.2;
    double idio_sigma_L = 0.05;
    double warming_per_year = 0.03;  ///< drift of the common low component after 1970
    double ma1 = 0.2;
    double high_common_share = 0.6;

    // Growth equation (percent)
    double alpha = 0.2;
    double b_L = -0.5;
    double delta_H = -0.1;
    double gamma_H = -0.15;
    double factor_scale = 1.5;
    double noise_sd = 1.5;
};

struct SyntheticData {
    Panel temperature;   ///< 48 states, first_year..last_year, population weights attached
    Panel growth;        ///< growth_first_year..last_year
    Panel low;           ///< true low component of the demeaned temperatures
    Panel high;          ///< true high component
    std::map<std::string, double> weights;     ///< raw population weights
    std::map<std::string, double> sigma_H;     ///< per-state high-frequency scale
    std::map<std::string, double> truth;       ///< growth-equation coefficients
};

/**
 * 48-state panel with a persistent common warming component, state-specific
 * high-frequency volatility and a dynamic growth equation with an interactive
 * common factor in the errors. Fully determined by the seed.
 */
[[nodiscard]] SyntheticData make_synthetic(const SyntheticOptions& options = {});

}  // namespace lowfreq::synthetic
