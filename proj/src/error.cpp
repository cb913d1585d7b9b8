#include "lowfreq/error.hpp"

namespace lowfreq {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NoPreCutoffData: return "NoPreCutoffData";
        case ErrorCode::MissingWeights: return "MissingWeights";
        case ErrorCode::LagTooLarge: return "LagTooLarge";
        case ErrorCode::NonInvertiblePolynomial: return "NonInvertiblePolynomial";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::OptimizerFailed: return "OptimizerFailed";
        case ErrorCode::QTooLarge: return "QTooLarge";
        case ErrorCode::SampleTooShort: return "SampleTooShort";
        case ErrorCode::DegenerateRank: return "DegenerateRank";
        case ErrorCode::IncompatibleAxes: return "IncompatibleAxes";
        case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::ExplosiveDynamics: return "ExplosiveDynamics";
        case ErrorCode::TooFewClusters: return "TooFewClusters";
        case ErrorCode::BootstrapDegenerate: return "BootstrapDegenerate";
        case ErrorCode::AxisMismatch: return "AxisMismatch";
        case ErrorCode::TooFewEstimates: return "TooFewEstimates";
        case ErrorCode::MissingCalibration: return "MissingCalibration";
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::UnknownElementCode: return "UnknownElementCode";
        case ErrorCode::MissingYearCoverage: return "MissingYearCoverage";
        case ErrorCode::NonPositiveLevel: return "NonPositiveLevel";
        case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    }
    return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::SingularSystem:
        case ErrorCode::SingularCovariance:
        case ErrorCode::OptimizerFailed:
        case ErrorCode::DegenerateRank:
        case ErrorCode::RankDeficientDesign:
        case ErrorCode::NoConvergence:
        case ErrorCode::ExplosiveDynamics:
        case ErrorCode::BootstrapDegenerate:
            return false;
        default:
            return true;
    }
}

}  // namespace lowfreq
