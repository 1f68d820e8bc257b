#pragma once

#include <stdexcept>
#include <string>

namespace misinfo {

// Every failure the library reports, one code per named error condition.
enum class Errc {
    // expression parsing / evaluation
    UnbalancedDollar,
    EmptySegment,
    UnboundSymbol,
    DivisionByZero,
    OpaquePresent,
    // perturbation
    NoNumbers,
    NoBinaryOps,
    NoSwappableNode,
    NoEligibleKind,
    GuardExhausted,
    // grading
    NoNumberFound,
    // metrics
    NoCorrectBaselinePairs,
    ZeroBaseline,
    TooFewItems,
    DegenerateInput,
    // behavior
    VerifierFailure,
    LengthMismatch,
    RowSumMismatch,
    PerfectExpectedAgreement,
    EmptyInput,
    // harness
    MissingMisinfo,
    NoSteps,
    PositionOutOfRange,
    MissingAltEquations,
    EndpointError,
    PrefixUnsupported,
    SolverError,
    AllRejected,
    // ingest
    MissingColumn,
    MissingAnswer,
    AmbiguousAnswer,
    UnbalancedBoxed,
    // cli / io
    MissingBaseline,
    BadFormat,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::UnbalancedDollar: return "UnbalancedDollar";
        case Errc::EmptySegment: return "EmptySegment";
        case Errc::UnboundSymbol: return "UnboundSymbol";
        case Errc::DivisionByZero: return "DivisionByZero";
        case Errc::OpaquePresent: return "OpaquePresent";
        case Errc::NoNumbers: return "NoNumbers";
        case Errc::NoBinaryOps: return "NoBinaryOps";
        case Errc::NoSwappableNode: return "NoSwappableNode";
        case Errc::NoEligibleKind: return "NoEligibleKind";
        case Errc::GuardExhausted: return "GuardExhausted";
        case Errc::NoNumberFound: return "NoNumberFound";
        case Errc::NoCorrectBaselinePairs: return "NoCorrectBaselinePairs";
        case Errc::ZeroBaseline: return "ZeroBaseline";
        case Errc::TooFewItems: return "TooFewItems";
        case Errc::DegenerateInput: return "DegenerateInput";
        case Errc::VerifierFailure: return "VerifierFailure";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::RowSumMismatch: return "RowSumMismatch";
        case Errc::PerfectExpectedAgreement: return "PerfectExpectedAgreement";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::MissingMisinfo: return "MissingMisinfo";
        case Errc::NoSteps: return "NoSteps";
        case Errc::PositionOutOfRange: return "PositionOutOfRange";
        case Errc::MissingAltEquations: return "MissingAltEquations";
        case Errc::EndpointError: return "EndpointError";
        case Errc::PrefixUnsupported: return "PrefixUnsupported";
        case Errc::SolverError: return "SolverError";
        case Errc::AllRejected: return "AllRejected";
        case Errc::MissingColumn: return "MissingColumn";
        case Errc::MissingAnswer: return "MissingAnswer";
        case Errc::AmbiguousAnswer: return "AmbiguousAnswer";
        case Errc::UnbalancedBoxed: return "UnbalancedBoxed";
        case Errc::MissingBaseline: return "MissingBaseline";
        case Errc::BadFormat: return "BadFormat";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace misinfo
