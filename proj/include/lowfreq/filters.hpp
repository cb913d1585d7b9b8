#pragma once

#include "lowfreq/series.hpp"

#include <Eigen/Dense>

#include <string>

namespace lowfreq::filters {

/**
 * @brief T x q matrix of cosine weights psi_j(s_t) = sqrt(2) cos(j pi s_t),
 * s_t = (t - 1/2) / T.
 *
 * Columns are orthogonal to each other and to the constant, with
 * psi' psi / T = I_q.
 */
[[nodiscard]] Eigen::MatrixXd cosine_basis(Eigen::Index T, int q);

/// Cosine coefficients T^{-1} psi' z (the q-vector driving the MW trend).
[[nodiscard]] Eigen::VectorXd cosine_coefficients(const Eigen::VectorXd& z, int q);

/// Projection of z on a constant and q cosine functions. Throws QTooLarge for q > T/2.
[[nodiscard]] Decomposition mw_decompose(const TimeSeries& z, int q);

/// Shortest periodicity (years) retained by MWq: 2T/q.
[[nodiscard]] double mw_periodicity(int T, int q);

/// Default q for a sample of T years: round(2T/32), at least 1.
[[nodiscard]] int default_mw_q(int T);

/**
 * @brief HP smoother for a fixed (T, lambda), reusable across series.
 *
 * The cycle is computed as Delta' (lambda^{-1} I + Delta Delta')^{-1} Delta z,
 * with Delta the (T-2) x T second-difference operator. This is algebraically
 * (I - S(lambda)) z and stays accurate for very large lambda.
 */
class HpSmoother {
public:
    HpSmoother(Eigen::Index T, double lambda);

    [[nodiscard]] Eigen::VectorXd cycle(const Eigen::VectorXd& z) const;
    [[nodiscard]] Eigen::VectorXd trend(const Eigen::VectorXd& z) const { return z - cycle(z); }
    /// Eigenvalues of I - S(lambda), ascending.
    [[nodiscard]] Eigen::VectorXd cycle_eigenvalues() const;

    [[nodiscard]] Eigen::Index size() const noexcept { return T_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }

private:
    Eigen::Index T_;
    double lambda_;
    Eigen::MatrixXd band_;  // Delta Delta'
    Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// (T-2) x T second-difference operator with rows (1, -2, 1).
[[nodiscard]] Eigen::MatrixXd second_difference(Eigen::Index T);

/// HP(lambda) trend and cycle; lambda = 0 returns the series as its own trend.
[[nodiscard]] Decomposition hp_decompose(const TimeSeries& z, double lambda);

struct BhpStopping {
    enum class Kind { Fixed, InformationCriterion };
    Kind kind = Kind::InformationCriterion;
    int m = 1;                ///< passes for Kind::Fixed
    int max_iterations = 100; ///< cap for Kind::InformationCriterion
};

/**
 * Boosted HP: the cycle after m passes is (I - S)^m z. Information-criterion
 * stopping halts at the first m whose criterion
 *   c_m'c_m / c_1'c_1 + log(T) tr(I - (I-S)^m) / tr(I - S)
 * exceeds the previous one. The chosen m is in the BhpMethod descriptor.
 */
[[nodiscard]] Decomposition bhp_decompose(const TimeSeries& z, double lambda,
                                          const BhpStopping& stopping = {});

/**
 * Hamilton projection: regress z_{t+h} on (1, z_t, ..., z_{t-p}). Low is the
 * fitted value and high the residual; both cover the last T - p - h years
 * (defined_from = p + h). Throws SampleTooShort when T < p + h + 10.
 */
[[nodiscard]] Decomposition jh_decompose(const TimeSeries& z, int p, int h);

struct FilterConfig {
    enum class Kind { MW, HP, BHP, JH };
    Kind kind = Kind::MW;
    int q = 8;
    double lambda = 100.0;
    BhpStopping stopping{};
    int p = 1;
    int h = 2;

    static FilterConfig mw(int q) { return {Kind::MW, q}; }
    static FilterConfig hp(double lambda) {
        FilterConfig c;
        c.kind = Kind::HP;
        c.lambda = lambda;
        return c;
    }
    static FilterConfig bhp(double lambda, BhpStopping stopping = {}) {
        FilterConfig c;
        c.kind = Kind::BHP;
        c.lambda = lambda;
        c.stopping = stopping;
        return c;
    }
    static FilterConfig jh(int p, int h) {
        FilterConfig c;
        c.kind = Kind::JH;
        c.p = p;
        c.h = h;
        return c;
    }

    /// Throws InvalidArgument for q < 1, lambda < 0, p < 0 or h < 1.
    void validate() const;
    [[nodiscard]] std::string label() const;
};

[[nodiscard]] Decomposition decompose(const TimeSeries& z, const FilterConfig& config);

/// Rescales a series to zero mean and unit (population) variance.
[[nodiscard]] TimeSeries standardize(const TimeSeries& s);

}  // namespace lowfreq::filters
