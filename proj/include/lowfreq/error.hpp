#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lowfreq {

/// Failure categories raised by the library. Each operation documents which
/// codes it can produce.
enum class ErrorCode {
    InvalidArgument,
    // series
    NoPreCutoffData,
    MissingWeights,
    LagTooLarge,
    // fractional UC
    NonInvertiblePolynomial,
    SingularSystem,
    SingularCovariance,
    OptimizerFailed,
    // filters
    QTooLarge,
    SampleTooShort,
    // factors
    DegenerateRank,
    IncompatibleAxes,
    // panel regressions
    RankDeficientDesign,
    NoConvergence,
    ExplosiveDynamics,
    // inference
    TooFewClusters,
    BootstrapDegenerate,
    // time-series regressions
    AxisMismatch,
    TooFewEstimates,
    // monte carlo
    MissingCalibration,
    // ingestion
    MalformedRecord,
    UnknownElementCode,
    MissingYearCoverage,
    NonPositiveLevel,
    EmptyIntersection,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// True for codes that indicate bad user input rather than a numerical failure.
[[nodiscard]] bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace lowfreq
