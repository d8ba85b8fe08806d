#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sld {

/// Every failure the library can raise. The names double as the wire-level
/// error identifiers returned by the service, so keep them stable.
enum class ErrorCode {
    // network-model
    ModeUnavailable,
    InvalidSpec,
    DanglingEndpoint,
    LineToLineConnection,
    PortOccupied,
    NotConnectable,
    InvalidPort,
    UnknownComponent,
    BusBarConnected,
    OutOfBounds,
    LineNotCopyable,
    NoCandidates,
    InvalidRoute,
    MalformedMagnitude,
    UnknownUnit,
    ArityMismatch,
    UnknownProperty,
    // per-unit
    MissingPUBase,
    MultiplePUBase,
    InconsistentBase,
    UnreachedRegion,
    NonPositiveBase,
    // power-flow
    NoSlackDesignated,
    MultipleSlack,
    IslandWithoutSlack,
    ConflictingBusData,
    IndexOutOfRange,
    DimensionMismatch,
    SingularDiagonal,
    SingularJacobian,
    Diverged,
    // state-estimation
    UnobservableSystem,
    InvalidMeasurement,
    OrderingViolation,
    // trace
    TraceClosed,
    // persistence
    IoFailure,
    ParseError,
    UnsupportedVersion,
    InvariantViolation,
    // service
    MethodModeMismatch,
    ValidationFailed,
    UnknownSession,
    BadRequest,
};

constexpr std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ModeUnavailable: return "ModeUnavailable";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
        case ErrorCode::LineToLineConnection: return "LineToLineConnection";
        case ErrorCode::PortOccupied: return "PortOccupied";
        case ErrorCode::NotConnectable: return "NotConnectable";
        case ErrorCode::InvalidPort: return "InvalidPort";
        case ErrorCode::UnknownComponent: return "UnknownComponent";
        case ErrorCode::BusBarConnected: return "BusBarConnected";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::LineNotCopyable: return "LineNotCopyable";
        case ErrorCode::NoCandidates: return "NoCandidates";
        case ErrorCode::InvalidRoute: return "InvalidRoute";
        case ErrorCode::MalformedMagnitude: return "MalformedMagnitude";
        case ErrorCode::UnknownUnit: return "UnknownUnit";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::UnknownProperty: return "UnknownProperty";
        case ErrorCode::MissingPUBase: return "MissingPUBase";
        case ErrorCode::MultiplePUBase: return "MultiplePUBase";
        case ErrorCode::InconsistentBase: return "InconsistentBase";
        case ErrorCode::UnreachedRegion: return "UnreachedRegion";
        case ErrorCode::NonPositiveBase: return "NonPositiveBase";
        case ErrorCode::NoSlackDesignated: return "NoSlackDesignated";
        case ErrorCode::MultipleSlack: return "MultipleSlack";
        case ErrorCode::IslandWithoutSlack: return "IslandWithoutSlack";
        case ErrorCode::ConflictingBusData: return "ConflictingBusData";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SingularDiagonal: return "SingularDiagonal";
        case ErrorCode::SingularJacobian: return "SingularJacobian";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::UnobservableSystem: return "UnobservableSystem";
        case ErrorCode::InvalidMeasurement: return "InvalidMeasurement";
        case ErrorCode::OrderingViolation: return "OrderingViolation";
        case ErrorCode::TraceClosed: return "TraceClosed";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::MethodModeMismatch: return "MethodModeMismatch";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::BadRequest: return "BadRequest";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code), detail_(detail) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }
    const std::string& detail() const noexcept { return detail_; }

  private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace sld
