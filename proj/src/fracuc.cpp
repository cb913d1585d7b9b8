#include "lowfreq/fracuc.hpp"

#include "lowfreq/optim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lowfreq::fracuc {

namespace {

// Coefficients of the product of two power series, truncated to n terms.
std::vector<double> convolve(std::span<const double> x, std::span<const double> y, int n) {
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (std::size_t i = 0; i < x.size() && i < out.size(); ++i) {
        for (std::size_t j = 0; j < y.size() && i + j < out.size(); ++j) out[i + j] += x[i] * y[j];
    }
    return out;
}

std::vector<double> with_leading_one(std::span<const double> a) {
    std::vector<double> poly{1.0};
    poly.insert(poly.end(), a.begin(), a.end());
    return poly;
}

// y = C x for the lower-triangular Toeplitz C with first column c.
Eigen::VectorXd toeplitz_apply(std::span<const double> c, const Eigen::VectorXd& x) {
    const Eigen::Index T = x.size();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        double acc = 0.0;
        const Eigen::Index lags = std::min<Eigen::Index>(t + 1, static_cast<Eigen::Index>(c.size()));
        for (Eigen::Index k = 0; k < lags; ++k) acc += c[static_cast<std::size_t>(k)] * x(t - k);
        y(t) = acc;
    }
    return y;
}

// G = C C' for lower-triangular Toeplitz C, using G(i+1,j+1) = G(i,j) + c_{i+1} c_{j+1}.
Eigen::MatrixXd toeplitz_gram(const std::vector<double>& c, Eigen::Index T) {
    Eigen::MatrixXd g(T, T);
    for (Eigen::Index j = 0; j < T; ++j) {
        g(0, j) = c[0] * c[static_cast<std::size_t>(j)];
    }
    for (Eigen::Index i = 1; i < T; ++i) {
        for (Eigen::Index j = i; j < T; ++j) {
            g(i, j) = g(i - 1, j - 1) + c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(j)];
        }
    }
    return g;  // upper triangle filled
}

bool is_integer_order(double d) { return std::abs(d - std::round(d)) < 1e-12; }

}  // namespace

void UcParams::validate() const {
    if (!(d > -0.5 && d <= 2.0)) throw Error(ErrorCode::InvalidArgument, "d must lie in (-0.5, 2]");
    if (!(sigma_L > 0.0) || !std::isfinite(sigma_L)) {
        throw Error(ErrorCode::InvalidArgument, "sigma_L must be positive");
    }
    if (!(sigma_H > 0.0) || !std::isfinite(sigma_H)) {
        throw Error(ErrorCode::InvalidArgument, "sigma_H must be positive");
    }
    if (!is_invertible(a)) throw Error(ErrorCode::NonInvertiblePolynomial, "a(L) has a root inside the unit circle");
}

std::vector<double> fracdiff_coeffs(double d, int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    std::vector<double> pi(static_cast<std::size_t>(n));
    pi[0] = 1.0;
    for (int j = 1; j < n; ++j) {
        pi[static_cast<std::size_t>(j)] = (j - d - 1.0) / j * pi[static_cast<std::size_t>(j - 1)];
    }
    return pi;
}

bool is_invertible(std::span<const double> a) {
    std::size_t p = a.size();
    while (p > 0 && a[p - 1] == 0.0) --p;
    if (p == 0) return true;
    for (std::size_t i = 0; i < p; ++i) {
        if (!std::isfinite(a[i])) return false;
    }
    // Roots of 1 + a_1 z + ... + a_p z^p outside the unit circle <=> roots of
    // z^p + a_1 z^{p-1} + ... + a_p inside it: companion eigenvalues below 1.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                                      static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) companion(0, static_cast<Eigen::Index>(j)) = -a[j];
    for (std::size_t i = 1; i < p; ++i) {
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
    return eig.eigenvalues().cwiseAbs().maxCoeff() < 1.0;
}

std::vector<double> ma_inverse_coeffs(std::span<const double> a, int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    if (!is_invertible(a)) {
        throw Error(ErrorCode::NonInvertiblePolynomial, "a(L) has a root on or inside the unit circle");
    }
    std::vector<double> b(static_cast<std::size_t>(n), 0.0);
    b[0] = 1.0;
    for (std::size_t j = 1; j < b.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 1; k <= a.size() && k <= j; ++k) acc += a[k - 1] * b[j - k];
        b[j] = -acc;
    }
    return b;
}

Eigen::MatrixXd lower_toeplitz(std::span<const double> c, Eigen::Index T) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(T, T);
    for (Eigen::Index k = 0; k < T && k < static_cast<Eigen::Index>(c.size()); ++k) {
        m.diagonal(-k).setConstant(c[static_cast<std::size_t>(k)]);
    }
    return m;
}

Decomposition uc_filter(const TimeSeries& z, const UcParams& params, Initialization init) {
    params.validate();
    const Eigen::Index T = z.size();
    if (T < 3) throw Error(ErrorCode::SampleTooShort, "UC smoother needs T >= 3");
    const int n = static_cast<int>(T);

    Eigen::MatrixXd S = lower_toeplitz(fracdiff_coeffs(params.d, n), T);
    if (init == Initialization::Diffuse) {
        if (!is_integer_order(params.d) || params.d < 0.0) {
            throw Error(ErrorCode::InvalidArgument, "diffuse initialization needs integer d >= 0");
        }
        const auto k = static_cast<Eigen::Index>(std::lround(params.d));
        S.topRows(k).setZero();
    }
    const Eigen::MatrixXd B = lower_toeplitz(ma_inverse_coeffs(params.a, n), T);

    const Eigen::MatrixXd btb = B.transpose() * B;
    const Eigen::MatrixXd sts = S.transpose() * S;
    const double nu = params.nu();
    const Eigen::MatrixXd system = btb + nu * sts;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularSystem, "B'B + nu S'S is not positive definite");
    }
    const Eigen::VectorXd& x = z.values();
    Eigen::VectorXd low = llt.solve(btb * x);
    const Eigen::VectorXd high_direct = nu * llt.solve(sts * x);
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    if (!low.allFinite() || (low + high_direct - x).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw Error(ErrorCode::SingularSystem, "UC smoother is numerically singular for these parameters");
    }
    Eigen::VectorXd high = x - low;

    Decomposition out{z, z.with_values(std::move(low)), z.with_values(std::move(high)),
                      UcMethod{params.d, params.sigma_L, params.sigma_H, params.a},
                      std::nullopt, 0, {}};
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().mean());
    if (std::abs(mean) > 1e-6 * sd) out.notes.push_back("input is not demeaned");
    if (init == Initialization::Diffuse) out.notes.push_back("diffuse initialization");
    return out;
}

double uc_loglik(const Eigen::VectorXd& z, const UcParams& params) {
    params.validate();
    const Eigen::Index T = z.size();
    if (T < 10) throw Error(ErrorCode::SampleTooShort, "UC likelihood needs T >= 10");
    const int n = static_cast<int>(T);

    // S z and K = S B^{-1}; |S| = 1, so the likelihood of S z equals that of z.
    const std::vector<double> pi = fracdiff_coeffs(params.d, n);
    const Eigen::VectorXd e = toeplitz_apply(pi, z);
    const std::vector<double> poly = with_leading_one(params.a);
    const std::vector<double> k = convolve(pi, poly, n);

    const double sl2 = params.sigma_L * params.sigma_L;
    const double sh2 = params.sigma_H * params.sigma_H;
    Eigen::MatrixXd omega = sh2 * toeplitz_gram(k, T);
    omega.diagonal().array() += sl2;
    Eigen::LLT<Eigen::MatrixXd, Eigen::Upper> llt(omega);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularCovariance, "covariance is not positive definite");
    }
    const Eigen::VectorXd w = llt.matrixL().solve(e);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double value =
        -0.5 * (static_cast<double>(T) * std::log(2.0 * std::numbers::pi) + log_det + w.squaredNorm());
    if (!std::isfinite(value)) throw Error(ErrorCode::SingularCovariance, "non-finite likelihood");
    return value;
}

double uc_loglik(const TimeSeries& z, const UcParams& params) { return uc_loglik(z.values(), params); }

UcFit uc_fit(const TimeSeries& z, double sigma_L, int p, const UcFitOptions& options) {
    if (p != 0 && p != 1) throw Error(ErrorCode::InvalidArgument, "p must be 0 or 1");
    if (!(sigma_L >= 0.01 && sigma_L <= 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "sigma_L must lie in [0.01, 0.5]");
    }
    if (z.size() < 10) throw Error(ErrorCode::SampleTooShort, "UC fit needs T >= 10");
    if (options.start_d.empty()) throw Error(ErrorCode::InvalidArgument, "no starting values");
    const double lo = options.d_lower;
    const double hi = options.d_upper;
    if (!(lo < hi) || lo <= -0.5 || hi > 2.0) throw Error(ErrorCode::InvalidArgument, "bad d box");

    const Eigen::VectorXd& x = z.values();
    const Eigen::Index dim = p == 1 ? 3 : 2;

    auto unpack = [&](const Eigen::VectorXd& theta) {
        UcParams params;
        params.d = lo + (hi - lo) / (1.0 + std::exp(-theta(0)));
        params.sigma_L = sigma_L;
        params.sigma_H = std::exp(theta(1));
        if (p == 1) params.a = {std::tanh(theta(2))};
        return params;
    };
    int evaluations = 0;
    auto objective = [&](const Eigen::VectorXd& theta) {
        ++evaluations;
        const UcParams params = unpack(theta);
        if (!(params.sigma_H > 0.0) || !std::isfinite(params.sigma_H)) {
            return std::numeric_limits<double>::infinity();
        }
        if (p == 1 && !(std::abs(params.a[0]) < 1.0)) return std::numeric_limits<double>::infinity();
        try {
            return -uc_loglik(x, params);
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Eigen::VectorXd dx(x.size() - 1);
    for (Eigen::Index t = 1; t < x.size(); ++t) dx(t - 1) = x(t) - x(t - 1);
    const double var_dx = (dx.array() - dx.mean()).square().mean();
    const double sigma_h0 =
        std::sqrt(std::max(var_dx - sigma_L * sigma_L, 0.01 * var_dx + 1e-12) / 2.0);

    optim::NelderMeadOptions nm;
    nm.f_tolerance = options.tolerance;
    nm.x_tolerance = 1e-5;
    nm.max_evaluations = options.max_evaluations;

    optim::NelderMeadResult best{};
    best.value = std::numeric_limits<double>::infinity();
    for (double d0 : options.start_d) {
        const double u = std::clamp((d0 - lo) / (hi - lo), 1e-6, 1.0 - 1e-6);
        Eigen::VectorXd theta0(dim);
        theta0(0) = std::log(u / (1.0 - u));
        theta0(1) = std::log(sigma_h0);
        if (p == 1) theta0(2) = 0.0;
        Eigen::VectorXd step(dim);
        step(0) = 0.5;
        step(1) = 0.3;
        if (p == 1) step(2) = 0.3;
        optim::NelderMeadResult run = optim::nelder_mead(objective, theta0, step, nm);
        if (run.value < best.value) best = std::move(run);
    }
    if (!std::isfinite(best.value)) {
        throw Error(ErrorCode::OptimizerFailed, "no start produced a finite likelihood");
    }

    UcConvergence conv;
    conv.iterations = best.iterations;
    conv.step_norm = best.last_step;
    conv.spread = best.spread;
    conv.converged = best.converged;
    conv.loglik_path.reserve(best.best_path.size());
    for (double v : best.best_path) conv.loglik_path.push_back(-v);
    Eigen::VectorXd grad(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const double h = 1e-5;
        Eigen::VectorXd up = best.x;
        Eigen::VectorXd down = best.x;
        up(j) += h;
        down(j) -= h;
        grad(j) = (objective(up) - objective(down)) / (2.0 * h);
    }
    conv.gradient_norm = grad.allFinite() ? grad.norm() : std::numeric_limits<double>::infinity();
    conv.evaluations = evaluations;

    const UcParams params = unpack(best.x);
    return UcFit{params, -best.value, uc_filter(z, params), std::move(conv)};
}

Eigen::VectorXd simulate_high(std::span<const double> a, double sigma_H, Eigen::Index T,
                              RngStream& rng) {
    const Eigen::VectorXd e = rng.normal_vector(T) * sigma_H;
    return toeplitz_apply(with_leading_one(a), e);
}

UcDraw simulate_uc(const UcParams& params, Eigen::Index T, RngStream& rng) {
    params.validate();
    const std::vector<double> psi = fracdiff_coeffs(-params.d, static_cast<int>(T));
    const Eigen::VectorXd e_low = rng.normal_vector(T) * params.sigma_L;
    UcDraw draw;
    draw.low = toeplitz_apply(psi, e_low);
    draw.high = simulate_high(params.a, params.sigma_H, T, rng);
    return draw;
}

}  // namespace lowfreq::fracuc
