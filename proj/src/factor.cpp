#include "lowfreq/factor.hpp"

#include "lowfreq/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lowfreq::factor {

std::optional<Eigen::Index> FactorModel::index_of(const std::string& unit_id) const {
    const auto it = std::find(unit_ids.begin(), unit_ids.end(), unit_id);
    if (it == unit_ids.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - unit_ids.begin());
}

PcResult principal_components(const Eigen::MatrixXd& x, int r) {
    const Eigen::Index N = x.rows();
    const Eigen::Index K = x.cols();
    if (r < 1 || r > std::min(N, K)) {
        throw Error(ErrorCode::InvalidArgument, "factor count must lie in [1, min(N, K)]");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = std::max<double>(N, K) * std::numeric_limits<double>::epsilon() *
                       (sv.size() > 0 ? sv(0) : 0.0);
    if (sv.size() < r || !(sv(r - 1) > tol) || !(sv(0) > 0.0)) {
        throw Error(ErrorCode::DegenerateRank, "panel has fewer than r nonzero singular values");
    }
    const double root_k = std::sqrt(static_cast<double>(K));
    PcResult out;
    out.factors = root_k * svd.matrixV().leftCols(r).transpose();
    out.loadings = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal() / root_k;

    const Eigen::RowVectorXd column_mean = x.colwise().mean();
    const Eigen::RowVectorXd centered = column_mean.array() - column_mean.mean();
    for (int k = 0; k < r; ++k) {
        const Eigen::RowVectorXd f = out.factors.row(k);
        double score = (f.array() - f.mean()).matrix().dot(centered);
        if (std::abs(score) <= 1e-12 * (f.norm() * centered.norm() + 1e-300)) {
            score = out.loadings.col(k).sum();
        }
        if (score < 0.0) {
            out.factors.row(k) *= -1.0;
            out.loadings.col(k) *= -1.0;
        }
    }
    return out;
}

namespace {

std::vector<Eigen::Index> sorted_order(const std::vector<std::string>& ids) {
    std::vector<Eigen::Index> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return ids[static_cast<std::size_t>(a)] < ids[static_cast<std::size_t>(b)];
    });
    return order;
}

Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).mean();
        out.row(i).array() -= mean;
        const double sd = std::sqrt(out.row(i).squaredNorm() / static_cast<double>(x.cols()));
        if (sd > 0.0) out.row(i) /= sd;
    }
    return out;
}

// One-factor model of the rows of x (processed in sorted-id order).
FactorModel fit_one_factor(const std::vector<std::string>& ids, const Eigen::MatrixXd& x,
                           bool standardize) {
    const Eigen::Index N = x.rows();
    if (N < 2 || x.cols() < 2) throw Error(ErrorCode::InvalidArgument, "first_pc needs N >= 2 and T >= 2");
    const std::vector<Eigen::Index> order = sorted_order(ids);
    Eigen::MatrixXd sorted(N, x.cols());
    for (Eigen::Index k = 0; k < N; ++k) sorted.row(k) = x.row(order[static_cast<std::size_t>(k)]);
    if (standardize) sorted = standardize_rows(sorted);

    const PcResult pc = principal_components(sorted, 1);
    FactorModel model;
    model.unit_ids = ids;
    model.factors = pc.factors;
    model.r = 1;
    model.standardized = standardize;
    model.loadings.resize(N, 1);
    model.communalities.resize(N);
    model.residuals.resize(N, x.cols());
    for (Eigen::Index k = 0; k < N; ++k) {
        const Eigen::Index i = order[static_cast<std::size_t>(k)];
        model.loadings(i, 0) = pc.loadings(k, 0);
        const Eigen::RowVectorXd fitted = pc.loadings(k, 0) * pc.factors.row(0);
        model.residuals.row(i) = sorted.row(k) - fitted;
        const double total = sorted.row(k).squaredNorm();
        model.communalities(i) = total > 0.0 ? fitted.squaredNorm() / total : 0.0;
    }
    return model;
}

}  // namespace

FactorModel first_pc(const Panel& p, bool standardize) {
    FactorModel model = fit_one_factor(p.unit_ids(), p.values(), standardize);
    model.weights = p.weights();
    model.first_year = p.first_year();
    model.source_T = p.T();
    return model;
}

std::pair<FactorModel, FactorModel> lowfreq_factor_model(const Panel& x, const Panel& dy, int q,
                                                         bool standardize) {
    if (x.first_year() != dy.first_year() || x.T() != dy.T()) {
        throw Error(ErrorCode::IncompatibleAxes, "temperature and growth panels must share years");
    }
    if (x.unit_ids() != dy.unit_ids()) {
        throw Error(ErrorCode::IncompatibleAxes, "temperature and growth panels must share units");
    }
    const Eigen::Index T = x.T();
    if (q < 1) throw Error(ErrorCode::InvalidArgument, "q must be at least 1");
    if (2 * static_cast<Eigen::Index>(q) > T) throw Error(ErrorCode::QTooLarge, "q exceeds T/2");
    const Eigen::MatrixXd psi = filters::cosine_basis(T, q);
    const double inv_t = 1.0 / static_cast<double>(T);

    auto fit = [&](const Panel& p) {
        FactorModel model = fit_one_factor(p.unit_ids(), p.values() * psi * inv_t, standardize);
        model.weights = p.weights();
        model.first_year = p.first_year();
        model.source_T = T;
        return model;
    };
    return {fit(x), fit(dy)};
}

Eigen::VectorXd mean_one_loadings(const FactorModel& model) {
    const Eigen::VectorXd l = model.loadings.col(0);
    const double mean = l.mean();
    if (!(std::abs(mean) > 0.0)) throw Error(ErrorCode::DegenerateRank, "mean loading is zero");
    return l / mean;
}

CommonIdiosyncraticSplit common_idio_split(const TimeSeries& s, const FactorModel& model, int q,
                                           double loading) {
    if (s.first_year() != model.first_year || s.size() != model.source_T) {
        throw Error(ErrorCode::IncompatibleAxes, "series axis differs from the factor model's");
    }
    if (model.factors.cols() != q || model.r != 1) {
        throw Error(ErrorCode::IncompatibleAxes, "factor model was not fitted on q cosine coefficients");
    }
    const Decomposition mw = filters::mw_decompose(s, q);
    const double mean = s.values().mean();
    const Eigen::MatrixXd psi = filters::cosine_basis(s.size(), q);
    Eigen::VectorXd common = psi * (loading * model.factors.row(0).transpose());
    common.array() += mean;
    Eigen::VectorXd idio = mw.low.values() - common;
    Eigen::VectorXd deviation = mw.low.values().array() - mean;
    return CommonIdiosyncraticSplit{mw.low, s.with_values(std::move(common)),
                                    s.with_values(std::move(idio)),
                                    s.with_values(std::move(deviation)), loading};
}

CommonIdiosyncraticSplit common_idio_split(const TimeSeries& s, const FactorModel& model, int q) {
    double loading = 0.0;
    if (const auto i = model.index_of(s.unit_id())) {
        loading = model.loadings(*i, 0);
    } else if (s.unit_id() == "aggregate") {
        if (!model.weights) throw Error(ErrorCode::MissingWeights, "aggregate loading needs weights");
        loading = model.weights->dot(model.loadings.col(0));
    } else {
        throw Error(ErrorCode::IncompatibleAxes, "unit '" + s.unit_id() + "' is not in the factor model");
    }
    return common_idio_split(s, model, q, loading);
}

}  // namespace lowfreq::factor
