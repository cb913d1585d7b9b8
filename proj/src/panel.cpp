#include "lowfreq/panel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace lowfreq::panel {

namespace {

Eigen::VectorXd stack(const Eigen::MatrixXd& m) {
    Eigen::VectorXd v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i) v.segment(i * m.cols(), m.cols()) = m.row(i).transpose();
    return v;
}

Eigen::MatrixXd unstack(const Eigen::VectorXd& v, Eigen::Index N, Eigen::Index T) {
    Eigen::MatrixXd m(N, T);
    for (Eigen::Index i = 0; i < N; ++i) m.row(i) = v.segment(i * T, T).transpose();
    return m;
}

Eigen::MatrixXd unit_demean(const Eigen::MatrixXd& m) {
    return m.colwise() - m.rowwise().mean();
}

Eigen::MatrixXd two_way_demean(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out = unit_demean(m);
    out.rowwise() -= out.colwise().mean();
    return out;
}

Eigen::MatrixXd transform_columns(const Eigen::MatrixXd& x, Eigen::Index N, Eigen::Index T,
                                  Eigen::MatrixXd (*f)(const Eigen::MatrixXd&)) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = stack(f(unstack(x.col(j), N, T)));
    return out;
}

struct LowRank {
    Eigen::MatrixXd loadings;  // N x r
    Eigen::MatrixXd factors;   // r x T
};

// Best rank-r approximation of w with F F'/T = I; factors signed to
// correlate positively with the cross-sectional mean of w.
LowRank leading_factors(const Eigen::MatrixXd& w, int r) {
    const Eigen::Index N = w.rows();
    const Eigen::Index T = w.cols();
    const double root_t = std::sqrt(static_cast<double>(T));
    LowRank out{Eigen::MatrixXd::Zero(N, r), Eigen::MatrixXd::Zero(r, T)};
    if (N <= T) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
        for (int k = 0; k < r; ++k) {
            const Eigen::RowVectorXd direction = eig.eigenvectors().col(N - 1 - k).transpose() * w;
            const double norm = direction.norm();
            if (norm > 0.0) out.factors.row(k) = root_t * direction / norm;
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w.transpose() * w);
        for (int k = 0; k < r; ++k) {
            if (eig.eigenvalues()(T - 1 - k) > 0.0) {
                out.factors.row(k) = root_t * eig.eigenvectors().col(T - 1 - k).transpose();
            }
        }
    }
    const Eigen::RowVectorXd mean = w.colwise().mean();
    const Eigen::RowVectorXd centered = mean.array() - mean.mean();
    out.loadings = w * out.factors.transpose() / static_cast<double>(T);
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

void require_same_axes(const Panel& a, const Panel& b, const std::string& what) {
    if (a.first_year() != b.first_year() || a.T() != b.T() || a.unit_ids() != b.unit_ids()) {
        throw Error(ErrorCode::IncompatibleAxes, what + " does not share the dependent panel's axes");
    }
}

Panel lag_slice(const Panel& p, int lag) {
    // Values at t - lag for t in [first + 1, last].
    return Panel(p.unit_ids(), p.first_year() + 1, p.values().middleCols(1 - lag, p.T() - 1),
                 p.weights(), p.units_label());
}

}  // namespace

std::string to_string(Heterogeneity h) {
    switch (h) {
        case Heterogeneity::FE: return "FE";
        case Heterogeneity::AFE: return "AFE";
        case Heterogeneity::IFE: return "IFE";
    }
    return "?";
}

void PanelSpec::validate() const {
    if (regressors.empty()) throw Error(ErrorCode::InvalidArgument, "no regressors");
    for (const auto& r : regressors) require_same_axes(r.values, dependent, "regressor '" + r.name + "'");
    if (heterogeneity == Heterogeneity::IFE && factors < 1) {
        throw Error(ErrorCode::InvalidArgument, "IFE needs r >= 1");
    }
    if (dependent.N() < 2 || dependent.T() < 2) {
        throw Error(ErrorCode::InvalidArgument, "panel regressions need N >= 2 and T >= 2");
    }
    if (heterogeneity == Heterogeneity::IFE && factors >= std::min(dependent.N(), dependent.T())) {
        throw Error(ErrorCode::InvalidArgument, "too many factors for the panel size");
    }
}

std::vector<std::string> PanelSpec::names() const {
    std::vector<std::string> out;
    for (const auto& r : regressors) out.push_back(r.name);
    return out;
}

Eigen::MatrixXd PanelSpec::design() const {
    Eigen::MatrixXd x(dependent.N() * dependent.T(), static_cast<Eigen::Index>(regressors.size()));
    for (std::size_t j = 0; j < regressors.size(); ++j) {
        x.col(static_cast<Eigen::Index>(j)) = stack(regressors[j].values.values());
    }
    return x;
}

Panel align_to(const Panel& component, const Panel& target) {
    if (component.first_year() > target.first_year() || component.last_year() < target.last_year()) {
        throw Error(ErrorCode::IncompatibleAxes, "component does not cover the regression years");
    }
    Panel sliced = component.slice_years(target.first_year(), target.last_year());
    if (sliced.unit_ids() != target.unit_ids()) {
        for (const auto& id : target.unit_ids()) {
            if (!sliced.index_of(id)) throw Error(ErrorCode::IncompatibleAxes, "unit '" + id + "' missing");
        }
        sliced = sliced.select_units(target.unit_ids());
    }
    return sliced.with_weights(target.weights());
}

PanelSpec static_spec(const Panel& dy, const Panel& low, const std::optional<Panel>& high,
                      Heterogeneity heterogeneity, int factors) {
    PanelSpec spec{dy, {{"beta_L", align_to(low, dy)}}, heterogeneity, factors, false, false};
    if (high) spec.regressors.push_back({"beta_H", align_to(*high, dy)});
    spec.validate();
    return spec;
}

PanelSpec dynamic_spec(const Panel& dy, const Panel& low, const Panel& high,
                       Heterogeneity heterogeneity, int factors) {
    if (dy.T() < 3) throw Error(ErrorCode::InvalidArgument, "dynamic spec needs T >= 3");
    const Panel l = align_to(low, dy);
    const Panel h = align_to(high, dy);
    const Panel y = lag_slice(dy, 0);
    const Panel h_now = lag_slice(h, 0);
    const Panel h_lag = lag_slice(h, 1);
    PanelSpec spec{y,
                   {{"alpha", lag_slice(dy, 1)},
                    {"b_L", lag_slice(l, 0)},
                    {"delta_H", h_now.with_values(h_now.values() - h_lag.values())},
                    {"gamma_H", h_lag}},
                   heterogeneity,
                   factors,
                   true,
                   false};
    spec.validate();
    return spec;
}

PanelSpec interaction_spec(const Panel& dy, const Panel& low, const Panel& high,
                           Heterogeneity heterogeneity, int factors) {
    const Panel l = align_to(low, dy);
    const Panel h = align_to(high, dy);
    PanelSpec spec{dy,
                   {{"beta_L", l},
                    {"beta_H", h},
                    {"beta_HL", h.with_values(h.values().cwiseProduct(l.values()))}},
                   heterogeneity,
                   factors,
                   false,
                   true};
    spec.validate();
    return spec;
}

std::optional<Eigen::Index> PanelEstimate::index_of(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - names.begin());
}

double PanelEstimate::coefficient(const std::string& name) const {
    const auto i = index_of(name);
    if (!i) throw Error(ErrorCode::InvalidArgument, "no coefficient named '" + name + "'");
    return coefficients(*i);
}

PanelEstimator::PanelEstimator(const PanelSpec& spec, IfeOptions options)
    : spec_(spec), options_(options) {
    spec_.validate();
    const Eigen::Index N = spec_.dependent.N();
    const Eigen::Index T = spec_.dependent.T();
    raw_ = spec_.design();
    unit_demeaned_ = transform_columns(raw_, N, T, unit_demean);
    transformed_ = spec_.heterogeneity == Heterogeneity::AFE
                       ? transform_columns(raw_, N, T, two_way_demean)
                       : unit_demeaned_;

    // Rank check on columns scaled by their untransformed norms, so a regressor
    // absorbed by the fixed effects shows up as a (near) zero pivot.
    const Eigen::Index k = raw_.cols();
    if (k > N * T) throw Error(ErrorCode::RankDeficientDesign, "more regressors than observations");
    Eigen::MatrixXd scaled = transformed_;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double norm = raw_.col(j).norm();
        if (!(norm > 0.0)) {
            throw Error(ErrorCode::RankDeficientDesign,
                        "regressor '" + spec_.regressors[static_cast<std::size_t>(j)].name + "' is zero");
        }
        scaled.col(j) /= norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> check(scaled);
    const Eigen::VectorXd pivots = check.matrixR().diagonal().cwiseAbs();
    for (Eigen::Index j = 0; j < k; ++j) {
        if (!(pivots(j) > 1e-10)) {
            throw Error(ErrorCode::RankDeficientDesign,
                        "regressors are collinear with each other or with the " +
                            to_string(spec_.heterogeneity) + " effects");
        }
    }
    qr_.compute(transformed_);
}

PanelEstimate PanelEstimator::estimate(const Eigen::MatrixXd& y) const {
    const Eigen::Index N = spec_.dependent.N();
    const Eigen::Index T = spec_.dependent.T();
    if (y.rows() != N || y.cols() != T) throw Error(ErrorCode::InvalidArgument, "dependent has the wrong shape");
    if (!y.allFinite()) throw Error(ErrorCode::InvalidArgument, "dependent has non-finite values");

    PanelEstimate est;
    est.heterogeneity = spec_.heterogeneity;
    est.names = spec_.names();
    est.N = N;
    est.T = T;
    est.design = transformed_;

    const Eigen::VectorXd y_stacked = stack(y);
    switch (spec_.heterogeneity) {
        case Heterogeneity::FE: {
            const Eigen::VectorXd yt = stack(unit_demean(y));
            est.coefficients = qr_.solve(yt);
            break;
        }
        case Heterogeneity::AFE: {
            const Eigen::VectorXd yt = stack(two_way_demean(y));
            est.coefficients = qr_.solve(yt);
            break;
        }
        case Heterogeneity::IFE: {
            const int r = spec_.factors;
            const Eigen::VectorXd yt = stack(unit_demean(y));
            // One alternating step: factors of the current residuals, then OLS.
            struct Step {
                Eigen::VectorXd beta;
                LowRank lr;
                double ssr;
            };
            auto step = [&](const Eigen::VectorXd& b) {
                Step s{{}, leading_factors(unstack(yt - transformed_ * b, N, T), r), 0.0};
                const Eigen::VectorXd common = stack(s.lr.loadings * s.lr.factors);
                s.beta = qr_.solve(yt - common);
                s.ssr = (yt - transformed_ * s.beta - common).squaredNorm();
                return s;
            };
            // SQUAREM extrapolation of the alternating map, falling back to the
            // plain double step whenever the extrapolated point raises the SSR.
            Eigen::VectorXd beta = qr_.solve(yt);
            LowRank lr{Eigen::MatrixXd::Zero(N, r), Eigen::MatrixXd::Zero(r, T)};
            est.converged = false;
            int evaluations = 0;
            auto accept = [&](const Step& s) {
                beta = s.beta;
                lr = s.lr;
                est.ssr_path.push_back(s.ssr);
            };
            while (evaluations < options_.max_iterations) {
                const Step s1 = step(beta);
                ++evaluations;
                const bool done = (s1.beta - beta).cwiseAbs().maxCoeff() <= options_.tolerance;
                if (done || evaluations >= options_.max_iterations) {
                    accept(s1);
                    est.converged = done;
                    break;
                }
                const Step s2 = step(s1.beta);
                ++evaluations;
                const Eigen::VectorXd rr = s1.beta - beta;
                const Eigen::VectorXd v = s2.beta - 2.0 * s1.beta + beta;
                const double vn = v.norm();
                if (!(vn > 0.0) || evaluations >= options_.max_iterations) {
                    accept(s1);
                    accept(s2);
                    continue;
                }
                const double alpha = std::min(-1.0, -rr.norm() / vn);
                const Eigen::VectorXd jump = beta - 2.0 * alpha * rr + alpha * alpha * v;
                const Step s3 = step(jump);
                ++evaluations;
                accept(s1);
                if (std::isfinite(s3.ssr) && s3.ssr <= s2.ssr) {
                    accept(s3);
                } else {
                    accept(s2);
                }
            }
            est.iterations = evaluations;
            est.coefficients = beta;
            est.loadings = lr.loadings;
            est.factors = lr.factors;
            break;
        }
    }

    // Fitted heterogeneity and residuals on the original scale.
    const Eigen::MatrixXd e = unstack(y_stacked - raw_ * est.coefficients, N, T);
    Eigen::MatrixXd het(N, T);
    switch (spec_.heterogeneity) {
        case Heterogeneity::FE:
            est.unit_effects = e.rowwise().mean();
            het = est.unit_effects.replicate(1, T);
            break;
        case Heterogeneity::AFE: {
            const double grand = e.mean();
            est.unit_effects = e.rowwise().mean();
            est.year_effects = e.colwise().mean().transpose().array() - grand;
            het = est.unit_effects.replicate(1, T) + est.year_effects.transpose().replicate(N, 1);
            break;
        }
        case Heterogeneity::IFE: {
            const Eigen::MatrixXd common = est.loadings * est.factors;
            est.unit_effects = (e - common).rowwise().mean();
            het = est.unit_effects.replicate(1, T) + common;
            break;
        }
    }
    est.heterogeneity_fit = het;
    est.residuals = e - het;
    est.ssr = est.residuals.squaredNorm();
    return est;
}

PanelEstimate fe_estimate(const PanelSpec& spec) {
    if (spec.heterogeneity != Heterogeneity::FE) throw Error(ErrorCode::InvalidArgument, "spec is not FE");
    return PanelEstimator(spec).estimate(spec.dependent.values());
}

PanelEstimate afe_estimate(const PanelSpec& spec) {
    if (spec.heterogeneity != Heterogeneity::AFE) throw Error(ErrorCode::InvalidArgument, "spec is not AFE");
    return PanelEstimator(spec).estimate(spec.dependent.values());
}

PanelEstimate ife_estimate(const PanelSpec& spec, IfeOptions options) {
    if (spec.heterogeneity != Heterogeneity::IFE) throw Error(ErrorCode::InvalidArgument, "spec is not IFE");
    return PanelEstimator(spec, options).estimate(spec.dependent.values());
}

PanelEstimate estimate(const PanelSpec& spec) {
    return PanelEstimator(spec).estimate(spec.dependent.values());
}

double long_run_effect(double b_L, double alpha) {
    if (!(std::abs(alpha) < 1.0)) {
        throw Error(ErrorCode::ExplosiveDynamics, "|alpha| >= 1 has no finite long-run effect");
    }
    return b_L / (1.0 - alpha);
}

MarginalEffects marginal_effects(const Eigen::VectorXd& coefficients,
                                 const std::vector<std::string>& names, const PanelSpec& spec) {
    auto find = [&](const std::string& name) -> Eigen::Index {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw Error(ErrorCode::InvalidArgument, "interaction fit lacks '" + name + "'");
        return static_cast<Eigen::Index>(it - names.begin());
    };
    auto regressor = [&](const std::string& name) -> const Panel& {
        for (const auto& r : spec.regressors) {
            if (r.name == name) return r.values;
        }
        throw Error(ErrorCode::InvalidArgument, "spec lacks regressor '" + name + "'");
    };
    const double b_l = coefficients(find("beta_L"));
    const double b_h = coefficients(find("beta_H"));
    const double b_hl = coefficients(find("beta_HL"));
    const Eigen::VectorXd low_bar = regressor("beta_L").values().colwise().mean().transpose();
    const Eigen::VectorXd high_bar = regressor("beta_H").values().colwise().mean().transpose();
    return MarginalEffects{spec.dependent.years(), (b_h + b_hl * low_bar.array()).matrix(),
                           (b_l + b_hl * high_bar.array()).matrix()};
}

NonlinearEstimate nonlinear_estimate(const PanelSpec& spec, IfeOptions options) {
    if (!spec.interaction) throw Error(ErrorCode::InvalidArgument, "spec has no interaction term");
    PanelEstimate est = PanelEstimator(spec, options).estimate(spec.dependent.values());
    MarginalEffects me = marginal_effects(est.coefficients, est.names, spec);
    return NonlinearEstimate{std::move(est), std::move(me)};
}

}  // namespace lowfreq::panel
