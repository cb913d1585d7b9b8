#pragma once

#include "lowfreq/series.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lowfreq::factor {

/**
 * @brief Principal-component factor structure X ~ Lambda F.
 *
 * Factors are r x K with F F' / K = I; loadings are N x r. For models
 * fitted on cosine coefficients K is q and the time axis of the source
 * panel is kept in first_year / source_T.
 */
struct FactorModel {
    std::vector<std::string> unit_ids;
    Eigen::MatrixXd factors;
    Eigen::MatrixXd loadings;
    int r = 1;
    Eigen::VectorXd communalities;  ///< uncentered R^2 of each unit on the factors
    Eigen::MatrixXd residuals;      ///< X - Lambda F (the U block)
    std::optional<Eigen::VectorXd> weights;
    int first_year = 0;
    Eigen::Index source_T = 0;
    bool standardized = false;

    [[nodiscard]] std::optional<Eigen::Index> index_of(const std::string& unit_id) const;
};

/// Factors and loadings of an N x K matrix.
struct PcResult {
    Eigen::MatrixXd factors;   ///< r x K, F F' / K = I
    Eigen::MatrixXd loadings;  ///< N x r
};

/**
 * Leading r principal components of the uncentered second-moment matrix of
 * x. Each factor is signed to correlate nonnegatively with the column means
 * of x (ties broken by a nonnegative loading sum). Throws DegenerateRank when
 * x has fewer than r nonzero singular values.
 */
[[nodiscard]] PcResult principal_components(const Eigen::MatrixXd& x, int r);

/**
 * First principal component of a panel. With @p standardize each unit is
 * centered and scaled to unit variance first. Units are processed in sorted
 * id order, so the factor does not depend on the order of the input rows.
 */
[[nodiscard]] FactorModel first_pc(const Panel& p, bool standardize = false);

/// One-factor models of the cosine coefficients T^{-1} psi' X_i and psi' Y_i.
[[nodiscard]] std::pair<FactorModel, FactorModel> lowfreq_factor_model(const Panel& x,
                                                                       const Panel& dy, int q,
                                                                       bool standardize = false);

/// Loadings rescaled to a cross-sectional mean of one (for reporting).
[[nodiscard]] Eigen::VectorXd mean_one_loadings(const FactorModel& model);

struct CommonIdiosyncraticSplit {
    TimeSeries low;             ///< MW(q) trend
    TimeSeries common;          ///< mean + psi (loading x factor)
    TimeSeries idiosyncratic;   ///< low - common
    TimeSeries mean_deviation;  ///< low - mean
    double loading = 0.0;
};

/**
 * Splits the MW(q) trend of a unit (matched by id) or of the weighted
 * aggregate (unit id "aggregate", loading sum_i w_i Lambda_i) into common and
 * idiosyncratic parts. Throws IncompatibleAxes when the series, q or unit do
 * not match the model.
 */
[[nodiscard]] CommonIdiosyncraticSplit common_idio_split(const TimeSeries& s,
                                                         const FactorModel& model, int q);

/// Same split with an explicit loading.
[[nodiscard]] CommonIdiosyncraticSplit common_idio_split(const TimeSeries& s,
                                                         const FactorModel& model, int q,
                                                         double loading);

}  // namespace lowfreq::factor
