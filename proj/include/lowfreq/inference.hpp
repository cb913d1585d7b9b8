#pragma once

#include "lowfreq/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lowfreq::inference {

enum class Scheme { OnewayUnit, Twoway, Hac, Bootstrap };

[[nodiscard]] std::string to_string(Scheme scheme);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct VarianceEstimate {
    Scheme scheme = Scheme::OnewayUnit;
    std::vector<std::string> names;
    Eigen::VectorXd se;
    Eigen::MatrixXd covariance;
    std::map<double, std::vector<Interval>> ci;  ///< level -> one interval per coefficient

    int bandwidth = 0;           ///< HAC lag truncation
    int replications = 0;        ///< bootstrap B
    bool degenerate = false;     ///< bootstrap with zero residuals: intervals collapse
    int nonconverged = 0;        ///< bootstrap IFE fits that hit the iteration cap
    Eigen::MatrixXd draws;       ///< B x k replication estimates (when kept)

    [[nodiscard]] double se_of(const std::string& name) const;
    [[nodiscard]] Interval ci_of(const std::string& name, double level) const;
};

/**
 * Cluster-robust sandwich (X'X)^{-1} (sum_g s_g s_g') (X'X)^{-1} for
 * arbitrary cluster labels, scaled by G/(G-1) (NT-1)/(NT-k) when
 * @p small_sample is set. Throws TooFewClusters when G < 2.
 */
[[nodiscard]] Eigen::MatrixXd cluster_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& u,
                                                 const std::vector<Eigen::Index>& cluster,
                                                 bool small_sample = true);

/// Unit-clustered standard errors of a panel fit.
[[nodiscard]] VarianceEstimate cluster_se_oneway(const panel::PanelEstimate& est,
                                                 bool small_sample = true);

/**
 * Two-way clustered errors V_unit + V_year - V_cell, each piece with its own
 * small-sample factor. Negative eigenvalues of the sum are set to zero.
 */
[[nodiscard]] VarianceEstimate cluster_se_twoway(const panel::PanelEstimate& est,
                                                 bool small_sample = true);

/// floor(0.75 T^{1/3}).
[[nodiscard]] int default_nw_bandwidth(Eigen::Index T);

/// Bartlett-kernel HAC sandwich; bandwidth 0 gives the White (HC0) estimator.
[[nodiscard]] VarianceEstimate newey_west_se(const Eigen::MatrixXd& x, const Eigen::VectorXd& u,
                                             int bandwidth);

/// Type-7 (linear interpolation) sample quantile of sorted values.
[[nodiscard]] double quantile_sorted(const std::vector<double>& sorted, double p);

/// Residuals below this multiple of max(1, max |Y|) count as zero.
inline constexpr double kZeroResidual = 1e-10;

enum class Resampling {
    Empirical,  ///< whole cross-sectional residual vectors drawn over time with replacement
    Gaussian,   ///< N(0, Sigma_u) with Sigma_u = U U' / T
};

struct BootstrapOptions {
    int B = 399;
    std::vector<double> levels{0.68, 0.90};
    std::uint64_t seed = 1;
    Resampling resampling = Resampling::Empirical;
    int threads = 1;
    bool keep_draws = false;
    bool strict = false;  ///< throw BootstrapDegenerate instead of collapsing intervals
};

/**
 * Fixed-design percentile bootstrap: regressors and fitted heterogeneity
 * (including the IFE common component) stay fixed, residuals are resampled
 * and the full estimator is rerun. Replication b uses RngStream(seed, b), so
 * results do not depend on the thread count.
 */
[[nodiscard]] VarianceEstimate fixed_design_bootstrap(const panel::PanelEstimator& estimator,
                                                      const panel::PanelEstimate& est,
                                                      const BootstrapOptions& options = {});

[[nodiscard]] VarianceEstimate fixed_design_bootstrap(const panel::PanelSpec& spec,
                                                      const panel::PanelEstimate& est,
                                                      const BootstrapOptions& options = {});

}  // namespace lowfreq::inference
