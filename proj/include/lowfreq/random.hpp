#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace lowfreq {

/**
 * @brief Random stream keyed by (master seed, stream index).
 *
 * Replication k of any simulation draws from stream(seed, k), so results do
 * not depend on how replications are scheduled across threads.
 */
class RngStream {
public:
    using result_type = std::mt19937_64::result_type;

    RngStream(std::uint64_t seed, std::uint64_t stream);

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    double normal() { return normal_(engine_); }
    /// Uniform integer on [0, n).
    std::size_t index(std::size_t n);
    Eigen::VectorXd normal_vector(Eigen::Index n);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives a sub-seed so distinct purposes within one run never share streams.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

}  // namespace lowfreq
