#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace lowfreq::optim {

struct NelderMeadOptions {
    double f_tolerance = 1e-8;   ///< stop when max - min vertex value falls below this
    double x_tolerance = 1e-6;   ///< ... and the simplex diameter falls below this
    int max_evaluations = 4000;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value;
    int iterations;
    int evaluations;
    bool converged;
    double spread;            ///< terminal max - min vertex value
    double last_step;         ///< norm of the final accepted best-vertex move
    std::vector<double> best_path;  ///< best value after each iteration
};

/**
 * Derivative-free simplex minimization (standard reflection/expansion/
 * contraction/shrink coefficients 1, 2, 1/2, 1/2). Non-finite objective
 * values are treated as +inf. The best vertex value is non-increasing.
 */
[[nodiscard]] NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                                           const NelderMeadOptions& options = {});

}  // namespace lowfreq::optim
