#include "lowfreq/series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lowfreq {

namespace {

void require_finite(const Eigen::MatrixXd& values, const std::string& what) {
    if (!values.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, what + " contains non-finite values");
    }
}

void validate_weights(const Eigen::VectorXd& w, Eigen::Index n) {
    if (w.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "weights length does not match number of units");
    }
    if ((w.array() < 0.0).any() || !w.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    }
    if (std::abs(w.sum() - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "weights must sum to one");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// TimeSeries

TimeSeries::TimeSeries(std::string unit_id, int first_year, Eigen::VectorXd values,
                       std::string units_label)
    : unit_id_(std::move(unit_id)),
      first_year_(first_year),
      values_(std::move(values)),
      units_label_(std::move(units_label)) {
    require_finite(values_, "series " + unit_id_);
}

TimeSeries::TimeSeries(std::string unit_id, const std::vector<int>& years, Eigen::VectorXd values,
                       std::string units_label)
    : unit_id_(std::move(unit_id)),
      first_year_(years.empty() ? 0 : years.front()),
      values_(std::move(values)),
      units_label_(std::move(units_label)) {
    if (static_cast<Eigen::Index>(years.size()) != values_.size()) {
        throw Error(ErrorCode::InvalidArgument, "years and values differ in length");
    }
    for (std::size_t t = 1; t < years.size(); ++t) {
        if (years[t] != years[t - 1] + 1) {
            throw Error(ErrorCode::InvalidArgument,
                        "years of series " + unit_id_ + " are not consecutive");
        }
    }
    require_finite(values_, "series " + unit_id_);
}

std::vector<int> TimeSeries::years() const {
    std::vector<int> y(static_cast<std::size_t>(values_.size()));
    std::iota(y.begin(), y.end(), first_year_);
    return y;
}

TimeSeries TimeSeries::with_values(Eigen::VectorXd values) const {
    if (values.size() != values_.size()) {
        throw Error(ErrorCode::InvalidArgument, "replacement values differ in length");
    }
    TimeSeries out = *this;
    out.values_ = std::move(values);
    require_finite(out.values_, "series " + unit_id_);
    return out;
}

TimeSeries TimeSeries::with_unit_id(std::string unit_id) const {
    TimeSeries out = *this;
    out.unit_id_ = std::move(unit_id);
    return out;
}

TimeSeries TimeSeries::with_units_label(std::string label) const {
    TimeSeries out = *this;
    out.units_label_ = std::move(label);
    return out;
}

TimeSeries TimeSeries::slice_years(int from, int to) const {
    if (from > to || from < first_year_ || to > last_year()) {
        std::ostringstream msg;
        msg << "year range " << from << "-" << to << " outside " << first_year_ << "-"
            << last_year();
        throw Error(ErrorCode::AxisMismatch, msg.str());
    }
    TimeSeries out = *this;
    out.first_year_ = from;
    out.values_ = values_.segment(from - first_year_, to - from + 1);
    return out;
}

// ---------------------------------------------------------------------------
// Panel

Panel::Panel(std::vector<std::string> unit_ids, int first_year, Eigen::MatrixXd values,
             std::optional<Eigen::VectorXd> weights, std::string units_label)
    : unit_ids_(std::move(unit_ids)),
      first_year_(first_year),
      values_(std::move(values)),
      weights_(std::move(weights)),
      units_label_(std::move(units_label)) {
    if (static_cast<Eigen::Index>(unit_ids_.size()) != values_.rows()) {
        throw Error(ErrorCode::InvalidArgument, "unit ids do not match panel rows");
    }
    require_finite(values_, "panel");
    if (weights_) validate_weights(*weights_, values_.rows());
}

std::vector<int> Panel::years() const {
    std::vector<int> y(static_cast<std::size_t>(values_.cols()));
    std::iota(y.begin(), y.end(), first_year_);
    return y;
}

TimeSeries Panel::unit(Eigen::Index i) const {
    return TimeSeries(unit_ids_.at(static_cast<std::size_t>(i)), first_year_,
                      values_.row(i).transpose(), units_label_);
}

std::optional<Eigen::Index> Panel::index_of(const std::string& unit_id) const {
    auto it = std::find(unit_ids_.begin(), unit_ids_.end(), unit_id);
    if (it == unit_ids_.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - unit_ids_.begin());
}

Panel Panel::with_values(Eigen::MatrixXd values) const {
    if (values.rows() != values_.rows()) {
        throw Error(ErrorCode::InvalidArgument, "replacement panel has a different unit count");
    }
    return Panel(unit_ids_, first_year_, std::move(values), weights_, units_label_);
}

Panel Panel::with_weights(std::optional<Eigen::VectorXd> weights) const {
    return Panel(unit_ids_, first_year_, values_, std::move(weights), units_label_);
}

Panel Panel::slice_years(int from, int to) const {
    if (from > to || from < first_year_ || to > last_year()) {
        std::ostringstream msg;
        msg << "year range " << from << "-" << to << " outside " << first_year_ << "-"
            << last_year();
        throw Error(ErrorCode::AxisMismatch, msg.str());
    }
    return Panel(unit_ids_, from, values_.middleCols(from - first_year_, to - from + 1), weights_,
                 units_label_);
}

Panel Panel::select_units(const std::vector<std::string>& unit_ids) const {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(unit_ids.size()), values_.cols());
    Eigen::VectorXd w(static_cast<Eigen::Index>(unit_ids.size()));
    for (std::size_t k = 0; k < unit_ids.size(); ++k) {
        auto idx = index_of(unit_ids[k]);
        if (!idx) throw Error(ErrorCode::AxisMismatch, "unknown unit " + unit_ids[k]);
        v.row(static_cast<Eigen::Index>(k)) = values_.row(*idx);
        if (weights_) w(static_cast<Eigen::Index>(k)) = (*weights_)(*idx);
    }
    std::optional<Eigen::VectorXd> new_weights;
    if (weights_ && w.sum() > 0.0) new_weights = normalize_weights(w);
    return Panel(unit_ids, first_year_, std::move(v), std::move(new_weights), units_label_);
}

Panel Panel::from_series(const std::vector<TimeSeries>& series,
                         std::optional<Eigen::VectorXd> weights) {
    if (series.empty()) throw Error(ErrorCode::InvalidArgument, "no series supplied");
    const int first = series.front().first_year();
    const Eigen::Index T = series.front().size();
    Eigen::MatrixXd v(static_cast<Eigen::Index>(series.size()), T);
    std::vector<std::string> ids;
    ids.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].first_year() != first || series[i].size() != T) {
            throw Error(ErrorCode::AxisMismatch, "series do not share a year axis");
        }
        v.row(static_cast<Eigen::Index>(i)) = series[i].values().transpose();
        ids.push_back(series[i].unit_id());
    }
    return Panel(std::move(ids), first, std::move(v), std::move(weights),
                 series.front().units_label());
}

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& raw) {
    if ((raw.array() < 0.0).any() || !raw.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    }
    const double total = raw.sum();
    if (total <= 0.0) throw Error(ErrorCode::InvalidArgument, "weights sum to zero");
    return raw / total;
}

// ---------------------------------------------------------------------------

std::string describe(const Method& method) {
    std::ostringstream out;
    std::visit(
        [&out](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, MwMethod>) {
                out << "MW" << m.q;
            } else if constexpr (std::is_same_v<M, HpMethod>) {
                out << "HP(" << m.lambda << ")";
            } else if constexpr (std::is_same_v<M, BhpMethod>) {
                out << "bHP(" << m.lambda << ",m=" << m.iterations
                    << (m.ic_stopping ? ",ic" : "") << ")";
            } else if constexpr (std::is_same_v<M, JhMethod>) {
                out << "JH(p=" << m.p << ",h=" << m.h << ")";
            } else {
                out << "UC(d=" << m.d << ",sigma_L=" << m.sigma_L << ",sigma_H=" << m.sigma_H;
                for (std::size_t j = 0; j < m.a.size(); ++j) out << ",a" << j + 1 << "=" << m.a[j];
                out << ")";
            }
        },
        method);
    return out.str();
}

// ---------------------------------------------------------------------------

TimeSeries demean_pre_cutoff(const TimeSeries& s, int cutoff_year) {
    const Eigen::Index n_pre =
        std::clamp<Eigen::Index>(cutoff_year - s.first_year(), 0, s.size());
    if (n_pre < 2) {
        throw Error(ErrorCode::NoPreCutoffData,
                    "series " + s.unit_id() + " has fewer than 2 observations before " +
                        std::to_string(cutoff_year));
    }
    const double mean = s.values().head(n_pre).mean();
    TimeSeries out = s.with_values(s.values().array() - mean);
    out.demean_cutoff_ = cutoff_year;
    return out;
}

Panel demean_pre_cutoff(const Panel& p, int cutoff_year) {
    Eigen::MatrixXd v = p.values();
    for (Eigen::Index i = 0; i < p.N(); ++i) {
        v.row(i) = demean_pre_cutoff(p.unit(i), cutoff_year).values().transpose();
    }
    return p.with_values(std::move(v));
}

TimeSeries weighted_aggregate(const Panel& p) {
    if (!p.weights()) {
        throw Error(ErrorCode::MissingWeights, "weighted_aggregate requires population weights");
    }
    Eigen::VectorXd agg = p.values().transpose() * (*p.weights());
    return TimeSeries("aggregate", p.first_year(), std::move(agg), p.units_label());
}

Correlogram autocorrelation(const TimeSeries& s, int max_lag) {
    const Eigen::Index T = s.size();
    if (max_lag < 0) throw Error(ErrorCode::InvalidArgument, "max_lag must be nonnegative");
    if (max_lag >= T) {
        throw Error(ErrorCode::LagTooLarge, "max_lag must be smaller than the series length");
    }
    const Eigen::VectorXd dev = s.values().array() - s.values().mean();
    const double denom = dev.squaredNorm();
    if (denom <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "autocorrelation of a constant series");
    }
    Correlogram out;
    out.r.reserve(static_cast<std::size_t>(max_lag));
    for (int k = 1; k <= max_lag; ++k) {
        out.r.push_back(dev.tail(T - k).dot(dev.head(T - k)) / denom);
    }
    out.null_band = 1.0 / std::sqrt(static_cast<double>(T));
    return out;
}

}  // namespace lowfreq
