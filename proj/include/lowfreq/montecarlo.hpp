#pragma once

#include "lowfreq/fracuc.hpp"
#include "lowfreq/panel.hpp"
#include "lowfreq/series.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace lowfreq::montecarlo {

enum class Design { FilterRmse, PanelFe, PanelIfe };

[[nodiscard]] std::string to_string(Design design);

struct McConfig {
    Design design = Design::PanelIfe;
    int replications = 200;
    double sigma_L = 0.2;
    std::vector<int> q_values{4};  ///< MW orders; panel designs use the first
    int B = 199;
    std::uint64_t seed = 1;
    int threads = 1;

    // Filter study
    double hp_lambda = 100.0;
    bool include_hp = true;
    bool include_bhp = true;
    bool include_uc = true;
    double sigma_H_scale = 1.0;  ///< multiplies the calibrated sigma_H (0 gives the noiseless cell)

    // Panel study
    int N = 48;
    int T = 60;
    bool oracle_components = false;  ///< use the true components instead of re-estimating them by MW
    double noise_scale = 1.0;        ///< multiplies the calibrated error covariance factor
    double ife_tolerance = 1e-8;

    /// Throws InvalidArgument.
    void validate() const;
};

/**
 * One table cell. For the filter study the estimates are the pointwise
 * errors of the low component; for the panel study they are replication
 * estimates of one coefficient. bias = mean - truth, variance is the
 * population variance, so rmse^2 = bias^2 + variance. sd is the sample
 * standard deviation (n - 1) of the stored estimates.
 */
struct McCell {
    std::string row;
    std::string column;
    double truth = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double sd = 0.0;
    double variance = 0.0;
    double rmse = 0.0;
    std::size_t count = 0;
    std::map<std::string, double> coverage;  ///< scheme -> share of intervals covering truth
    std::map<std::string, double> info;
};

struct McReport {
    Design design = Design::PanelIfe;
    McConfig config;
    std::vector<std::pair<std::string, std::string>> header;
    std::vector<McCell> cells;
    /// Panel study: replications x coefficients. Filter study: per-replication RMSE, one column per cell.
    Eigen::MatrixXd estimates;
    int nonconverged = 0;

    [[nodiscard]] const McCell& cell(const std::string& row, const std::string& column) const;
};

// ---------------------------------------------------------------------------
// Filter RMSE study

struct StateCalibration {
    std::string unit;
    fracuc::UcParams params;
    Eigen::VectorXd low;  ///< fitted low component (the truth in the study)
    double loglik = 0.0;
};

struct FilterCalibration {
    double sigma_L = 0.2;
    int first_year = 0;
    std::vector<StateCalibration> states;
};

/// The states of the filter study.
[[nodiscard]] const std::vector<std::string>& filter_states();

/**
 * Fits the UC model with MA order @p p and fixed sigma_L to each listed unit
 * (demeaned over the sample) and stores the smoothed low component.
 */
[[nodiscard]] FilterCalibration calibrate_filters(const Panel& temperature,
                                                  const std::vector<std::string>& units,
                                                  double sigma_L, int p = 1, int threads = 1);

/**
 * Holds each calibrated low path fixed, adds simulated high components
 * (sigma_H a(L) e) and reports the error of every filter's low component.
 * Columns: MW<q> for each q, HP<lambda>, bHP, UC (smoother at the calibrated
 * parameters). Throws MissingCalibration when no states are calibrated.
 */
[[nodiscard]] McReport mc_filter_rmse(const FilterCalibration& calibration, const McConfig& config);

// ---------------------------------------------------------------------------
// Panel estimation and coverage study

/**
 * Data-generating process for the panel study, fitted to a growth panel and
 * the matching temperatures:
 *   L = lambda_L (mu_L + psi c) + a + psi C',  c ~ N(0, s_L^2 I_q), C columns ~ N(0, Sigma_L)
 *   H = lambda_H (m + g) + E,  m = MW28 of the H factor, g AR(1), E cols ~ N(0, Sigma_H)
 *   dY_t = alpha dY_t-1 + b_L L_t + delta_H dH_t + gamma_H H_t-1 + gamma + lambda f_t + u_t,
 *   u_t ~ N(0, Sigma_u).
 */
struct PanelCalibration {
    std::vector<std::string> units;
    int first_year = 0;
    int q = 4;
    double alpha = 0.0;
    double b_L = 0.0;
    double delta_H = 0.0;
    double gamma_H = 0.0;
    Eigen::VectorXd unit_effects;
    Eigen::VectorXd loadings;       ///< lambda (N)
    Eigen::VectorXd factor;         ///< f (T), zero before the estimation sample
    Eigen::MatrixXd chol_u;         ///< N x N square root of Sigma_u
    Eigen::VectorXd dy0;            ///< first-year growth (initial condition)

    Eigen::MatrixXd low_common;     ///< N x T fitted common part (reference only)
    Eigen::VectorXd low_loadings;   ///< lambda_L (N)
    Eigen::VectorXd low_offset;     ///< a (N)
    double low_factor_mean = 0.0;   ///< mu_L
    double low_factor_scale = 0.0;  ///< s_L: rms cosine coefficient of the fitted factor
    Eigen::MatrixXd chol_low;       ///< N x N square root of Sigma_L
    Eigen::VectorXd high_loadings;  ///< N
    Eigen::VectorXd high_smooth;    ///< m (T)
    double high_rho = 0.0;
    double high_sigma = 0.0;        ///< innovation sd of g
    Eigen::MatrixXd chol_high;      ///< N x N square root of Sigma_H

    [[nodiscard]] std::vector<std::pair<std::string, double>> summary() const;
};

/// Fits the DGP pieces to growth and temperature panels sharing units and years.
[[nodiscard]] PanelCalibration calibrate_panel(const Panel& growth, const Panel& temperature, int q = 4);

struct PanelDraw {
    Eigen::MatrixXd dy;
    Eigen::MatrixXd low;
    Eigen::MatrixXd high;
};

/// One simulated panel (replication @p rep of the seed).
[[nodiscard]] PanelDraw simulate_panel(const PanelCalibration& cal, const McConfig& config, int rep);

/**
 * Simulates panels, estimates the dynamic model (FE or IFE by design) with
 * components re-estimated by MWq and tabulates bias, sd and 90% coverage for
 * one-way clustered (asy1), two-way clustered (asy2, FE only) and bootstrap
 * intervals. Deterministic for a given seed regardless of threads.
 */
[[nodiscard]] McReport mc_panel(const PanelCalibration& calibration, const McConfig& config);

}  // namespace lowfreq::montecarlo
