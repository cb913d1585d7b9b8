#pragma once

#include "lowfreq/error.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lowfreq {

/**
 * @brief One unit's annual observations on a consecutive year axis.
 *
 * Values are finite; missing observations are resolved at ingestion. The
 * object is immutable after construction.
 */
class TimeSeries {
public:
    TimeSeries(std::string unit_id, int first_year, Eigen::VectorXd values,
               std::string units_label = {});

    /// Validates that @p years is strictly consecutive and matches @p values.
    TimeSeries(std::string unit_id, const std::vector<int>& years, Eigen::VectorXd values,
               std::string units_label = {});

    [[nodiscard]] const std::string& unit_id() const noexcept { return unit_id_; }
    [[nodiscard]] const std::string& units_label() const noexcept { return units_label_; }
    [[nodiscard]] int first_year() const noexcept { return first_year_; }
    [[nodiscard]] int last_year() const noexcept {
        return first_year_ + static_cast<int>(values_.size()) - 1;
    }
    [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }
    [[nodiscard]] std::vector<int> years() const;
    [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
    [[nodiscard]] double operator[](Eigen::Index t) const { return values_(t); }

    /// Cutoff year of a prior demean_pre_cutoff call, if any.
    [[nodiscard]] std::optional<int> demean_cutoff() const noexcept { return demean_cutoff_; }

    /// Same axis and metadata, new values (validated).
    [[nodiscard]] TimeSeries with_values(Eigen::VectorXd values) const;
    [[nodiscard]] TimeSeries with_unit_id(std::string unit_id) const;
    [[nodiscard]] TimeSeries with_units_label(std::string label) const;
    /// Inclusive year range; throws AxisMismatch when outside the axis.
    [[nodiscard]] TimeSeries slice_years(int from, int to) const;

private:
    friend TimeSeries demean_pre_cutoff(const TimeSeries&, int);

    std::string unit_id_;
    int first_year_;
    Eigen::VectorXd values_;
    std::string units_label_;
    std::optional<int> demean_cutoff_;
};

/**
 * @brief Rectangular N x T panel with a shared consecutive year axis.
 *
 * Optional weights are static, nonnegative and sum to one within 1e-12.
 */
class Panel {
public:
    Panel(std::vector<std::string> unit_ids, int first_year, Eigen::MatrixXd values,
          std::optional<Eigen::VectorXd> weights = std::nullopt, std::string units_label = {});

    [[nodiscard]] Eigen::Index N() const noexcept { return values_.rows(); }
    [[nodiscard]] Eigen::Index T() const noexcept { return values_.cols(); }
    [[nodiscard]] const std::vector<std::string>& unit_ids() const noexcept { return unit_ids_; }
    [[nodiscard]] int first_year() const noexcept { return first_year_; }
    [[nodiscard]] int last_year() const noexcept {
        return first_year_ + static_cast<int>(values_.cols()) - 1;
    }
    [[nodiscard]] std::vector<int> years() const;
    [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }
    [[nodiscard]] const std::optional<Eigen::VectorXd>& weights() const noexcept {
        return weights_;
    }
    [[nodiscard]] const std::string& units_label() const noexcept { return units_label_; }

    [[nodiscard]] TimeSeries unit(Eigen::Index i) const;
    [[nodiscard]] std::optional<Eigen::Index> index_of(const std::string& unit_id) const;

    [[nodiscard]] Panel with_values(Eigen::MatrixXd values) const;
    [[nodiscard]] Panel with_weights(std::optional<Eigen::VectorXd> weights) const;
    [[nodiscard]] Panel slice_years(int from, int to) const;
    /// Reorders/subsets units; weights (if any) are renormalized over the subset.
    [[nodiscard]] Panel select_units(const std::vector<std::string>& unit_ids) const;

    /// Builds a panel from per-unit series that share one year axis.
    [[nodiscard]] static Panel from_series(const std::vector<TimeSeries>& series,
                                           std::optional<Eigen::VectorXd> weights = std::nullopt);

private:
    std::vector<std::string> unit_ids_;
    int first_year_;
    Eigen::MatrixXd values_;
    std::optional<Eigen::VectorXd> weights_;
    std::string units_label_;
};

/// Normalizes nonnegative raw weights to sum to one.
[[nodiscard]] Eigen::VectorXd normalize_weights(const Eigen::VectorXd& raw);

// ---------------------------------------------------------------------------
// Decomposition descriptors

struct MwMethod {
    int q;
};
struct HpMethod {
    double lambda;
};
struct BhpMethod {
    double lambda;
    int iterations;     ///< boosting passes actually applied (m)
    bool ic_stopping;   ///< m chosen by information criterion
};
struct JhMethod {
    int p;
    int h;
};
struct UcMethod {
    double d;
    double sigma_L;
    double sigma_H;
    std::vector<double> a;
};

using Method = std::variant<MwMethod, HpMethod, BhpMethod, JhMethod, UcMethod>;

[[nodiscard]] std::string describe(const Method& method);

/**
 * @brief Low/high-frequency split of a source series.
 *
 * low + high reproduces source on [defined_from, T). Only the Hamilton
 * projection leaves a prefix undefined; its low/high series then start at
 * source year first_year + defined_from.
 */
struct Decomposition {
    TimeSeries source;
    TimeSeries low;
    TimeSeries high;
    Method method;
    std::optional<Eigen::VectorXd> coeffs;  ///< cosine coefficients for MW
    Eigen::Index defined_from = 0;
    std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Operations

/// Subtracts the mean of observations strictly before @p cutoff_year.
/// Throws NoPreCutoffData when fewer than two such observations exist.
[[nodiscard]] TimeSeries demean_pre_cutoff(const TimeSeries& s, int cutoff_year);

/// Same transformation applied to each unit of a panel.
[[nodiscard]] Panel demean_pre_cutoff(const Panel& p, int cutoff_year);

/// Population-weighted cross-sectional average; throws MissingWeights.
[[nodiscard]] TimeSeries weighted_aggregate(const Panel& p);

struct Correlogram {
    std::vector<double> r;  ///< r_1 .. r_max_lag
    double null_band;       ///< 1/sqrt(T)
};

/// Biased sample autocorrelations (lag-0 denominator over the full sample).
[[nodiscard]] Correlogram autocorrelation(const TimeSeries& s, int max_lag);

}  // namespace lowfreq
