#pragma once

#include "lowfreq/random.hpp"
#include "lowfreq/series.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace testing {

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed, std::uint64_t stream = 0) {
    lowfreq::RngStream rng(seed, stream);
    return rng.normal_vector(n);
}

inline Eigen::VectorXd random_walk(Eigen::Index n, std::uint64_t seed, std::uint64_t stream = 0) {
    Eigen::VectorXd v = random_vector(n, seed, stream);
    for (Eigen::Index t = 1; t < n; ++t) v(t) += v(t - 1);
    return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    lowfreq::RngStream rng(seed, 0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    }
    return m;
}

inline std::vector<std::string> unit_names(Eigen::Index n, const std::string& prefix = "u") {
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < n; ++i) {
        ids.push_back(prefix + (i < 10 ? "0" : "") + std::to_string(i));
    }
    return ids;
}

/// Plain least squares via the normal equations, for oracle comparisons.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing
