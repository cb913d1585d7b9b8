#pragma once

#include "lowfreq/random.hpp"
#include "lowfreq/series.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace lowfreq::fracuc {

/**
 * @brief Parameters of the fractional unobserved-components model
 *
 *   z_t = L_t + H_t,  (1 - L)^d L_t = e_L,t,  H_t = a(L) e_H,t,
 *
 * with a(L) = 1 + a_1 L + ... + a_p L^p and Var(e_L) = sigma_L^2,
 * Var(e_H) = sigma_H^2.
 */
struct UcParams {
    double d = 1.0;
    double sigma_L = 0.2;
    double sigma_H = 0.6;
    std::vector<double> a;

    /// Noise-to-signal ratio sigma_H^2 / sigma_L^2.
    [[nodiscard]] double nu() const { return sigma_H * sigma_H / (sigma_L * sigma_L); }

    /// Throws InvalidArgument (d, sigmas) or NonInvertiblePolynomial (a).
    void validate() const;
};

/// How the fractional difference treats observations before the sample.
enum class Initialization {
    ZeroPresample,  ///< type-II truncation: all pre-sample values are zero
    Diffuse,        ///< integer d only: drop the first d rows of S (no presample assumption)
};

/// pi_0..pi_{n-1} of (1 - L)^d: pi_0 = 1, pi_j = (j - d - 1)/j * pi_{j-1}.
[[nodiscard]] std::vector<double> fracdiff_coeffs(double d, int n);

/// True when all roots of 1 + a_1 z + ... + a_p z^p lie outside the unit circle.
[[nodiscard]] bool is_invertible(std::span<const double> a);

/// b_0..b_{n-1} of b(L) = a(L)^{-1}. Throws NonInvertiblePolynomial.
[[nodiscard]] std::vector<double> ma_inverse_coeffs(std::span<const double> a, int n);

/// T x T lower-triangular Toeplitz matrix with first column (c_0, c_1, ...).
[[nodiscard]] Eigen::MatrixXd lower_toeplitz(std::span<const double> c, Eigen::Index T);

/**
 * @brief Smoothed components L = (B'B + nu S'S)^{-1} B'B z and H = z - L.
 *
 * Observations are in calendar order, so S and B act on past values
 * (lower triangular). Throws SingularSystem when the system is numerically
 * singular.
 */
[[nodiscard]] Decomposition uc_filter(const TimeSeries& z, const UcParams& params,
                                      Initialization init = Initialization::ZeroPresample);

/**
 * Exact Gaussian log-likelihood of z with Cov(z) = sigma_L^2 S^{-1}S^{-T} +
 * sigma_H^2 B^{-1}B^{-T} (zero presample). Throws SingularCovariance.
 */
[[nodiscard]] double uc_loglik(const TimeSeries& z, const UcParams& params);
[[nodiscard]] double uc_loglik(const Eigen::VectorXd& z, const UcParams& params);

struct UcFitOptions {
    std::vector<double> start_d{0.6, 0.9, 1.1, 1.3, 1.45};
    double d_lower = 0.51;
    double d_upper = 1.49;
    double tolerance = 1e-8;
    int max_evaluations = 3000;
};

struct UcConvergence {
    int iterations = 0;          ///< simplex iterations of the winning start
    int evaluations = 0;         ///< likelihood evaluations across all starts
    double gradient_norm = 0.0;  ///< central-difference gradient in the search coordinates
    double step_norm = 0.0;      ///< last move of the best vertex
    double spread = 0.0;         ///< terminal objective spread over the simplex
    bool converged = false;
    std::vector<double> loglik_path;  ///< best log-likelihood per iteration (non-decreasing)
};

struct UcFit {
    UcParams params;
    double loglik = 0.0;
    Decomposition decomposition;
    UcConvergence convergence;
};

/**
 * Maximizes uc_loglik over (d, sigma_H, a_1) with sigma_L fixed. p is 0 or 1;
 * sigma_L must lie in [0.01, 0.5]. Throws OptimizerFailed when no start
 * reaches a finite likelihood.
 */
[[nodiscard]] UcFit uc_fit(const TimeSeries& z, double sigma_L, int p,
                           const UcFitOptions& options = {});

/// Draw of both components over T periods (zero presample).
struct UcDraw {
    Eigen::VectorXd low;
    Eigen::VectorXd high;
};

[[nodiscard]] UcDraw simulate_uc(const UcParams& params, Eigen::Index T, RngStream& rng);

/// H_t = sigma_H * a(L) e_t with e iid N(0,1) and zero presample.
[[nodiscard]] Eigen::VectorXd simulate_high(std::span<const double> a, double sigma_H,
                                            Eigen::Index T, RngStream& rng);

}  // namespace lowfreq::fracuc
