#pragma once

#include "lowfreq/series.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lowfreq::panel {

enum class Heterogeneity { FE, AFE, IFE };

[[nodiscard]] std::string to_string(Heterogeneity h);

struct NamedPanel {
    std::string name;
    Panel values;
};

/**
 * @brief Regression of a dependent panel on named regressor panels.
 *
 * All panels share units and years. Observations are stacked unit-major
 * (row i*T + t).
 */
struct PanelSpec {
    Panel dependent;
    std::vector<NamedPanel> regressors;
    Heterogeneity heterogeneity = Heterogeneity::FE;
    int factors = 1;  ///< r for IFE
    bool dynamic = false;
    bool interaction = false;

    /// Throws InvalidArgument / IncompatibleAxes.
    void validate() const;
    [[nodiscard]] std::vector<std::string> names() const;
    /// NT x k stacked regressor matrix (untransformed).
    [[nodiscard]] Eigen::MatrixXd design() const;
};

/// Restricts components estimated on a longer temperature record to the growth years.
[[nodiscard]] Panel align_to(const Panel& component, const Panel& target);

/// dY_it = beta_L L_it [+ beta_H H_it] + m_it + u_it.
[[nodiscard]] PanelSpec static_spec(const Panel& dy, const Panel& low, const std::optional<Panel>& high,
                                    Heterogeneity heterogeneity, int factors = 1);

/**
 * dY_it = alpha dY_i,t-1 + b_L L_it + delta_H dH_it + gamma_H H_i,t-1 + m_it + u_it.
 * The first year is lost to the lags.
 */
[[nodiscard]] PanelSpec dynamic_spec(const Panel& dy, const Panel& low, const Panel& high,
                                     Heterogeneity heterogeneity, int factors = 1);

/// dY_it = beta_L L_it + beta_H H_it + beta_HL H_it L_it + m_it + u_it (uncentered product).
[[nodiscard]] PanelSpec interaction_spec(const Panel& dy, const Panel& low, const Panel& high,
                                         Heterogeneity heterogeneity = Heterogeneity::IFE,
                                         int factors = 1);

struct PanelEstimate {
    Heterogeneity heterogeneity = Heterogeneity::FE;
    std::vector<std::string> names;
    Eigen::VectorXd coefficients;
    Eigen::Index N = 0;
    Eigen::Index T = 0;
    Eigen::MatrixXd residuals;      ///< N x T
    Eigen::MatrixXd heterogeneity_fit;  ///< N x T fitted m_it
    Eigen::VectorXd unit_effects;   ///< gamma_i
    Eigen::VectorXd year_effects;   ///< xi_t (AFE), mean zero
    Eigen::MatrixXd loadings;       ///< N x r (IFE)
    Eigen::MatrixXd factors;        ///< r x T (IFE), F F'/T = I
    Eigen::MatrixXd design;         ///< NT x k transformed regressors used for standard errors
    double ssr = 0.0;
    int iterations = 0;
    bool converged = true;
    std::vector<double> ssr_path;   ///< IFE objective after each iteration

    [[nodiscard]] double coefficient(const std::string& name) const;
    [[nodiscard]] std::optional<Eigen::Index> index_of(const std::string& name) const;
};

struct IfeOptions {
    double tolerance = 1e-8;
    int max_iterations = 1000;
};

/**
 * @brief Estimator with the regressor transformations precomputed, so the
 * same design can be re-estimated for many dependent panels (bootstrap).
 */
class PanelEstimator {
public:
    explicit PanelEstimator(const PanelSpec& spec, IfeOptions options = {});

    [[nodiscard]] PanelEstimate estimate(const Eigen::MatrixXd& dependent) const;
    [[nodiscard]] const PanelSpec& spec() const noexcept { return spec_; }

private:
    PanelSpec spec_;
    IfeOptions options_;
    Eigen::MatrixXd raw_;          // NT x k
    Eigen::MatrixXd unit_demeaned_;
    Eigen::MatrixXd transformed_;  // what OLS runs on: unit- or two-way-demeaned
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

[[nodiscard]] PanelEstimate fe_estimate(const PanelSpec& spec);
[[nodiscard]] PanelEstimate afe_estimate(const PanelSpec& spec);
[[nodiscard]] PanelEstimate ife_estimate(const PanelSpec& spec, IfeOptions options = {});
/// Dispatches on spec.heterogeneity.
[[nodiscard]] PanelEstimate estimate(const PanelSpec& spec);

/// b_L / (1 - alpha); throws ExplosiveDynamics when |alpha| >= 1.
[[nodiscard]] double long_run_effect(double b_L, double alpha);

struct MarginalEffects {
    std::vector<int> years;
    Eigen::VectorXd high;  ///< beta_H + beta_HL * mean_i L_it
    Eigen::VectorXd low;   ///< beta_L + beta_HL * mean_i H_it
};

/// Marginal effects of an interaction fit at the cross-sectional means of the components.
[[nodiscard]] MarginalEffects marginal_effects(const Eigen::VectorXd& coefficients,
                                               const std::vector<std::string>& names,
                                               const PanelSpec& spec);

struct NonlinearEstimate {
    PanelEstimate estimate;
    MarginalEffects effects;
};

/// IFE fit of an interaction spec plus its marginal-effect paths.
[[nodiscard]] NonlinearEstimate nonlinear_estimate(const PanelSpec& spec, IfeOptions options = {});

}  // namespace lowfreq::panel
