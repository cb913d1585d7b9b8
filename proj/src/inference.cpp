#include "lowfreq/inference.hpp"

#include "lowfreq/parallel.hpp"
#include "lowfreq/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lowfreq::inference {

namespace {

Eigen::VectorXd stack(const Eigen::MatrixXd& m) {
    Eigen::VectorXd v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i) v.segment(i * m.cols(), m.cols()) = m.row(i).transpose();
    return v;
}

Eigen::MatrixXd bread(const Eigen::MatrixXd& x) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(x.transpose() * x);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
        throw Error(ErrorCode::RankDeficientDesign, "X'X is singular");
    }
    return ldlt.solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
}

Eigen::VectorXd standard_errors(const Eigen::MatrixXd& v) {
    return v.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& v) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (v + v.transpose()));
    if (eig.eigenvalues().minCoeff() >= 0.0) return v;
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::string to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::OnewayUnit: return "oneway_unit";
        case Scheme::Twoway: return "twoway";
        case Scheme::Hac: return "hac";
        case Scheme::Bootstrap: return "bootstrap";
    }
    return "?";
}

double VarianceEstimate::se_of(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(ErrorCode::InvalidArgument, "no coefficient named '" + name + "'");
    return se(it - names.begin());
}

Interval VarianceEstimate::ci_of(const std::string& name, double level) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(ErrorCode::InvalidArgument, "no coefficient named '" + name + "'");
    const auto lv = ci.find(level);
    if (lv == ci.end()) throw Error(ErrorCode::InvalidArgument, "no interval at that level");
    return lv->second[static_cast<std::size_t>(it - names.begin())];
}

Eigen::MatrixXd cluster_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& u,
                                   const std::vector<Eigen::Index>& cluster, bool small_sample) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    if (u.size() != n || static_cast<Eigen::Index>(cluster.size()) != n) {
        throw Error(ErrorCode::InvalidArgument, "design, residuals and clusters differ in length");
    }
    const Eigen::Index G = n == 0 ? 0 : *std::max_element(cluster.begin(), cluster.end()) + 1;
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(G, k);
    for (Eigen::Index r = 0; r < n; ++r) scores.row(cluster[static_cast<std::size_t>(r)]) += x.row(r) * u(r);
    std::vector<char> seen(static_cast<std::size_t>(G), 0);
    for (Eigen::Index c : cluster) seen[static_cast<std::size_t>(c)] = 1;
    const auto populated = static_cast<Eigen::Index>(std::count(seen.begin(), seen.end(), 1));
    if (populated < 2) throw Error(ErrorCode::TooFewClusters, "clustering needs at least two clusters");
    const Eigen::MatrixXd b = bread(x);
    Eigen::MatrixXd v = b * (scores.transpose() * scores) * b;
    if (small_sample) {
        const double g = static_cast<double>(populated);
        const double nn = static_cast<double>(n);
        if (nn - static_cast<double>(k) <= 0.0) {
            throw Error(ErrorCode::InvalidArgument, "no residual degrees of freedom");
        }
        v *= g / (g - 1.0) * (nn - 1.0) / (nn - static_cast<double>(k));
    }
    return v;
}

namespace {

std::vector<Eigen::Index> unit_clusters(Eigen::Index N, Eigen::Index T) {
    std::vector<Eigen::Index> c(static_cast<std::size_t>(N * T));
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index t = 0; t < T; ++t) c[static_cast<std::size_t>(i * T + t)] = i;
    }
    return c;
}

std::vector<Eigen::Index> year_clusters(Eigen::Index N, Eigen::Index T) {
    std::vector<Eigen::Index> c(static_cast<std::size_t>(N * T));
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index t = 0; t < T; ++t) c[static_cast<std::size_t>(i * T + t)] = t;
    }
    return c;
}

VarianceEstimate from_covariance(Scheme scheme, const std::vector<std::string>& names,
                                 Eigen::MatrixXd v) {
    VarianceEstimate out;
    out.scheme = scheme;
    out.names = names;
    out.se = standard_errors(v);
    out.covariance = std::move(v);
    return out;
}

}  // namespace

VarianceEstimate cluster_se_oneway(const panel::PanelEstimate& est, bool small_sample) {
    if (est.N < 2) throw Error(ErrorCode::TooFewClusters, "one-way clustering needs N >= 2");
    const Eigen::VectorXd u = stack(est.residuals);
    return from_covariance(Scheme::OnewayUnit, est.names,
                           cluster_covariance(est.design, u, unit_clusters(est.N, est.T), small_sample));
}

VarianceEstimate cluster_se_twoway(const panel::PanelEstimate& est, bool small_sample) {
    if (est.N < 2 || est.T < 2) throw Error(ErrorCode::TooFewClusters, "two-way clustering needs N, T >= 2");
    const Eigen::VectorXd u = stack(est.residuals);
    std::vector<Eigen::Index> cells(static_cast<std::size_t>(est.N * est.T));
    std::iota(cells.begin(), cells.end(), Eigen::Index{0});
    const Eigen::MatrixXd v = cluster_covariance(est.design, u, unit_clusters(est.N, est.T), small_sample) +
                              cluster_covariance(est.design, u, year_clusters(est.N, est.T), small_sample) -
                              cluster_covariance(est.design, u, cells, small_sample);
    return from_covariance(Scheme::Twoway, est.names, psd_repair(v));
}

int default_nw_bandwidth(Eigen::Index T) {
    return static_cast<int>(std::floor(0.75 * std::cbrt(static_cast<double>(T))));
}

VarianceEstimate newey_west_se(const Eigen::MatrixXd& x, const Eigen::VectorXd& u, int bandwidth) {
    if (bandwidth < 0) throw Error(ErrorCode::InvalidArgument, "bandwidth must be >= 0");
    if (x.rows() != u.size()) throw Error(ErrorCode::InvalidArgument, "design and residuals differ in length");
    const Eigen::Index T = x.rows();
    const Eigen::MatrixXd scores = x.array().colwise() * u.array();
    Eigen::MatrixXd meat = scores.transpose() * scores;
    for (int l = 1; l <= bandwidth && l < T; ++l) {
        const double w = 1.0 - static_cast<double>(l) / (bandwidth + 1.0);
        const Eigen::MatrixXd gamma = scores.bottomRows(T - l).transpose() * scores.topRows(T - l);
        meat += w * (gamma + gamma.transpose());
    }
    const Eigen::MatrixXd b = bread(x);
    VarianceEstimate out = from_covariance(Scheme::Hac, {}, b * meat * b);
    out.bandwidth = bandwidth;
    return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "probability outside [0, 1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

VarianceEstimate fixed_design_bootstrap(const panel::PanelEstimator& estimator,
                                        const panel::PanelEstimate& est,
                                        const BootstrapOptions& options) {
    if (options.B < 99) throw Error(ErrorCode::InvalidArgument, "bootstrap needs B >= 99");
    for (double level : options.levels) {
        if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "CI levels must lie in (0, 1)");
    }
    const Eigen::MatrixXd& resid = est.residuals;
    const Eigen::Index N = est.N;
    const Eigen::Index T = est.T;
    const Eigen::Index k = est.coefficients.size();
    const Eigen::MatrixXd fitted = estimator.spec().dependent.values() - resid;

    VarianceEstimate out;
    out.scheme = Scheme::Bootstrap;
    out.names = est.names;
    out.replications = options.B;

    const double scale = std::max(1.0, estimator.spec().dependent.values().cwiseAbs().maxCoeff());
    if (!(resid.cwiseAbs().maxCoeff() > kZeroResidual * scale)) {
        if (options.strict) throw Error(ErrorCode::BootstrapDegenerate, "residuals are identically zero");
        out.degenerate = true;
        out.se = Eigen::VectorXd::Zero(k);
        out.covariance = Eigen::MatrixXd::Zero(k, k);
        for (double level : options.levels) {
            std::vector<Interval> ci;
            for (Eigen::Index j = 0; j < k; ++j) ci.push_back({est.coefficients(j), est.coefficients(j)});
            out.ci[level] = std::move(ci);
        }
        if (options.keep_draws) out.draws = est.coefficients.transpose().replicate(options.B, 1);
        return out;
    }

    Eigen::MatrixXd draws(options.B, k);
    std::vector<char> converged(static_cast<std::size_t>(options.B), 1);
    const double inv_root_t = 1.0 / std::sqrt(static_cast<double>(T));
    parallel_for(static_cast<std::size_t>(options.B), options.threads, [&](std::size_t b) {
        RngStream rng(options.seed, b);
        Eigen::MatrixXd u(N, T);
        if (options.resampling == Resampling::Empirical) {
            for (Eigen::Index t = 0; t < T; ++t) {
                u.col(t) = resid.col(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(T))));
            }
        } else {
            for (Eigen::Index t = 0; t < T; ++t) u.col(t) = resid * rng.normal_vector(T) * inv_root_t;
        }
        const panel::PanelEstimate rep = estimator.estimate(fitted + u);
        draws.row(static_cast<Eigen::Index>(b)) = rep.coefficients.transpose();
        converged[b] = rep.converged ? 1 : 0;
    });
    out.nonconverged = static_cast<int>(std::count(converged.begin(), converged.end(), 0));

    const Eigen::RowVectorXd mean = draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.rowwise() - mean;
    out.covariance = centered.transpose() * centered / static_cast<double>(options.B - 1);
    out.se = standard_errors(out.covariance);
    for (double level : options.levels) {
        std::vector<Interval> ci;
        for (Eigen::Index j = 0; j < k; ++j) {
            std::vector<double> column(draws.col(j).data(), draws.col(j).data() + options.B);
            std::sort(column.begin(), column.end());
            ci.push_back({quantile_sorted(column, 0.5 * (1.0 - level)),
                          quantile_sorted(column, 0.5 * (1.0 + level))});
        }
        out.ci[level] = std::move(ci);
    }
    if (options.keep_draws) out.draws = std::move(draws);
    return out;
}

VarianceEstimate fixed_design_bootstrap(const panel::PanelSpec& spec, const panel::PanelEstimate& est,
                                        const BootstrapOptions& options) {
    const panel::PanelEstimator estimator(spec);
    return fixed_design_bootstrap(estimator, est, options);
}

}  // namespace lowfreq::inference
