#include "lowfreq/filters.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace lowfreq::filters {

Eigen::MatrixXd cosine_basis(Eigen::Index T, int q) {
    if (T < 1 || q < 0) throw Error(ErrorCode::InvalidArgument, "cosine basis needs T >= 1, q >= 0");
    Eigen::MatrixXd psi(T, q);
    const double root2 = std::numbers::sqrt2;
    for (Eigen::Index t = 0; t < T; ++t) {
        const double s = (static_cast<double>(t) + 0.5) / static_cast<double>(T);
        for (int j = 1; j <= q; ++j) psi(t, j - 1) = root2 * std::cos(j * s * std::numbers::pi);
    }
    return psi;
}

Eigen::VectorXd cosine_coefficients(const Eigen::VectorXd& z, int q) {
    const Eigen::MatrixXd psi = cosine_basis(z.size(), q);
    return psi.transpose() * z / static_cast<double>(z.size());
}

Decomposition mw_decompose(const TimeSeries& z, int q) {
    const Eigen::Index T = z.size();
    if (q < 1) throw Error(ErrorCode::InvalidArgument, "q must be at least 1");
    if (2 * static_cast<Eigen::Index>(q) > T) {
        throw Error(ErrorCode::QTooLarge,
                    "q=" + std::to_string(q) + " exceeds T/2 for T=" + std::to_string(T));
    }
    const Eigen::MatrixXd psi = cosine_basis(T, q);
    const Eigen::VectorXd& x = z.values();
    Eigen::VectorXd coeffs = psi.transpose() * x / static_cast<double>(T);
    Eigen::VectorXd low = (psi * coeffs).array() + x.mean();
    Eigen::VectorXd high = x - low;
    return Decomposition{z,
                         z.with_values(std::move(low)),
                         z.with_values(std::move(high)),
                         MwMethod{q},
                         std::move(coeffs),
                         0,
                         {}};
}

double mw_periodicity(int T, int q) {
    if (q < 1) throw Error(ErrorCode::InvalidArgument, "q must be at least 1");
    return 2.0 * T / q;
}

int default_mw_q(int T) {
    return std::max(1, static_cast<int>(std::lround(2.0 * T / 32.0)));
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd second_difference(Eigen::Index T) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(T - 2, 0), T);
    for (Eigen::Index r = 0; r + 2 < T; ++r) {
        d(r, r) = 1.0;
        d(r, r + 1) = -2.0;
        d(r, r + 2) = 1.0;
    }
    return d;
}

namespace {

// Delta Delta' for the second-difference operator: pentadiagonal (1,-4,6,-4,1).
Eigen::MatrixXd second_difference_gram(Eigen::Index n) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = 6.0;
        if (i + 1 < n) g(i, i + 1) = g(i + 1, i) = -4.0;
        if (i + 2 < n) g(i, i + 2) = g(i + 2, i) = 1.0;
    }
    return g;
}

Eigen::VectorXd apply_delta(const Eigen::VectorXd& z) {
    const Eigen::Index T = z.size();
    Eigen::VectorXd out(T - 2);
    for (Eigen::Index r = 0; r + 2 < T; ++r) out(r) = z(r) - 2.0 * z(r + 1) + z(r + 2);
    return out;
}

Eigen::VectorXd apply_delta_transpose(const Eigen::VectorXd& v, Eigen::Index T) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(T);
    for (Eigen::Index r = 0; r < v.size(); ++r) {
        out(r) += v(r);
        out(r + 1) -= 2.0 * v(r);
        out(r + 2) += v(r);
    }
    return out;
}

}  // namespace

HpSmoother::HpSmoother(Eigen::Index T, double lambda) : T_(T), lambda_(lambda) {
    if (T < 4) throw Error(ErrorCode::SampleTooShort, "HP filter needs T >= 4");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::InvalidArgument, "HpSmoother needs a finite lambda > 0");
    }
    band_ = second_difference_gram(T - 2);
    Eigen::MatrixXd m = band_;
    m.diagonal().array() += 1.0 / lambda;
    factor_.compute(m);
    if (factor_.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularSystem, "HP system factorization failed");
    }
}

Eigen::VectorXd HpSmoother::cycle(const Eigen::VectorXd& z) const {
    if (z.size() != T_) throw Error(ErrorCode::InvalidArgument, "series length mismatch");
    return apply_delta_transpose(factor_.solve(apply_delta(z)), T_);
}

Eigen::VectorXd HpSmoother::cycle_eigenvalues() const {
    // I - S has eigenvalues lambda*mu / (1 + lambda*mu), mu over eig(Delta'Delta):
    // the nonzero spectrum equals eig(Delta Delta') plus two zeros.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(band_, Eigen::EigenvaluesOnly);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(T_);
    for (Eigen::Index k = 0; k < band_.rows(); ++k) {
        const double lm = lambda_ * std::max(eig.eigenvalues()(k), 0.0);
        out(k + 2) = lm / (1.0 + lm);
    }
    return out;
}

Decomposition hp_decompose(const TimeSeries& z, double lambda) {
    if (z.size() < 4) throw Error(ErrorCode::SampleTooShort, "HP filter needs T >= 4");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::InvalidArgument, "lambda must be finite and nonnegative");
    }
    Eigen::VectorXd high = Eigen::VectorXd::Zero(z.size());
    if (lambda > 0.0) high = HpSmoother(z.size(), lambda).cycle(z.values());
    Eigen::VectorXd low = z.values() - high;
    return Decomposition{z, z.with_values(std::move(low)), z.with_values(std::move(high)),
                         HpMethod{lambda}, std::nullopt, 0, {}};
}

Decomposition bhp_decompose(const TimeSeries& z, double lambda, const BhpStopping& stopping) {
    if (z.size() < 4) throw Error(ErrorCode::SampleTooShort, "boosted HP needs T >= 4");
    if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "boosted HP needs lambda > 0");
    const HpSmoother smoother(z.size(), lambda);
    Eigen::VectorXd cycle = smoother.cycle(z.values());
    int m = 1;
    const bool ic = stopping.kind == BhpStopping::Kind::InformationCriterion;

    if (!ic) {
        if (stopping.m < 1) throw Error(ErrorCode::InvalidArgument, "boosting passes m must be >= 1");
        for (; m < stopping.m; ++m) cycle = smoother.cycle(cycle);
    } else {
        if (stopping.max_iterations < 1) {
            throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
        }
        const Eigen::VectorXd rho = smoother.cycle_eigenvalues();
        const double tr_cycle = rho.sum();
        const double hp_ss = cycle.squaredNorm();
        const double log_t = std::log(static_cast<double>(z.size()));
        auto criterion = [&](const Eigen::VectorXd& c, int passes) {
            const double tr_b = (1.0 - rho.array().pow(passes)).sum();
            const double fit = hp_ss > 0.0 ? c.squaredNorm() / hp_ss : 0.0;
            return fit + log_t * tr_b / tr_cycle;
        };
        double previous = criterion(cycle, 1);
        while (m < stopping.max_iterations) {
            Eigen::VectorXd next = smoother.cycle(cycle);
            const double current = criterion(next, m + 1);
            if (current > previous) break;
            cycle = std::move(next);
            previous = current;
            ++m;
        }
    }
    Eigen::VectorXd low = z.values() - cycle;
    return Decomposition{z, z.with_values(std::move(low)), z.with_values(std::move(cycle)),
                         BhpMethod{lambda, m, ic}, std::nullopt, 0, {}};
}

Decomposition jh_decompose(const TimeSeries& z, int p, int h) {
    if (p < 0 || h < 1) throw Error(ErrorCode::InvalidArgument, "JH needs p >= 0 and h >= 1");
    const Eigen::Index T = z.size();
    if (T < p + h + 10) {
        throw Error(ErrorCode::SampleTooShort,
                    "JH(p=" + std::to_string(p) + ",h=" + std::to_string(h) +
                        ") needs T >= p + h + 10");
    }
    const Eigen::Index n = T - p - h;
    Eigen::MatrixXd x(n, p + 2);
    Eigen::VectorXd y(n);
    const Eigen::VectorXd& v = z.values();
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::Index t = r + p;
        x(r, 0) = 1.0;
        for (int lag = 0; lag <= p; ++lag) x(r, lag + 1) = v(t - lag);
        y(r) = v(t + h);
    }
    // Minimum-norm least squares so collinear lags (e.g. exact trends) still fit.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
    const Eigen::VectorXd beta = cod.solve(y);
    Eigen::VectorXd fitted = x * beta;
    Eigen::VectorXd resid = y - fitted;

    const int first = z.first_year() + p + h;
    TimeSeries source_tail = z.slice_years(first, z.last_year());
    Decomposition out{z,
                      source_tail.with_values(std::move(fitted)),
                      source_tail.with_values(std::move(resid)),
                      JhMethod{p, h},
                      beta,
                      p + h,
                      {}};
    out.notes.push_back("low/high undefined for the first " + std::to_string(p + h) + " years");
    return out;
}

// ---------------------------------------------------------------------------

void FilterConfig::validate() const {
    switch (kind) {
        case Kind::MW:
            if (q < 1) throw Error(ErrorCode::InvalidArgument, "q must be >= 1");
            break;
        case Kind::HP:
        case Kind::BHP:
            if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
            break;
        case Kind::JH:
            if (p < 0 || h < 1) throw Error(ErrorCode::InvalidArgument, "JH needs p >= 0, h >= 1");
            break;
    }
}

std::string FilterConfig::label() const {
    std::ostringstream out;
    switch (kind) {
        case Kind::MW: out << "MW" << q; break;
        case Kind::HP: out << "HP(" << lambda << ")"; break;
        case Kind::BHP:
            out << "bHP(" << lambda;
            if (stopping.kind == BhpStopping::Kind::Fixed) out << ",m=" << stopping.m;
            out << ")";
            break;
        case Kind::JH: out << "JH(" << p << "," << h << ")"; break;
    }
    return out.str();
}

Decomposition decompose(const TimeSeries& z, const FilterConfig& config) {
    config.validate();
    switch (config.kind) {
        case FilterConfig::Kind::MW: return mw_decompose(z, config.q);
        case FilterConfig::Kind::HP: return hp_decompose(z, config.lambda);
        case FilterConfig::Kind::BHP: return bhp_decompose(z, config.lambda, config.stopping);
        case FilterConfig::Kind::JH: return jh_decompose(z, config.p, config.h);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown filter kind");
}

TimeSeries standardize(const TimeSeries& s) {
    const double mean = s.values().mean();
    Eigen::VectorXd dev = s.values().array() - mean;
    const double sd = std::sqrt(dev.squaredNorm() / static_cast<double>(s.size()));
    if (sd > 0.0) dev /= sd;
    return s.with_values(std::move(dev));
}

}  // namespace lowfreq::filters
