#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shapecrp {

/// Failure kinds raised by the library. Each maps onto one of the CLI exit
/// categories (usage, data, numerical) through error_category().
enum class ErrorCode {
    // usage / configuration
    InvalidArgument,
    UnknownConfigKey,
    // mesh ingest and geometry
    MissingHeader,
    CountMismatch,
    NonTriangleFace,
    IndexOutOfRange,
    MalformedNumber,
    RepeatedVertex,
    NonPositiveScale,
    InvalidParams,
    EmptyMesh,
    DegenerateFace,
    UnreferencedVertex,
    // spectra and descriptors
    KTooLarge,
    InsufficientEigenvalues,
    ZeroDescriptor,
    // coding / projection / classifier
    DimensionMismatch,
    SingleClass,
    EmptyClass,
    NonFinite,
    ClassTooSmall,
    // files
    IoError,
    ParseError,
    MissingCacheEntry,
    // numerical failures
    ConvergenceFailure,
    SingularSystem,
    IterationBudgetExceeded,
    CholeskyFailure,
};

enum class ErrorCategory { Usage = 1, Data = 2, Numerical = 3 };

constexpr ErrorCategory error_category(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownConfigKey:
        return ErrorCategory::Usage;
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::SingularSystem:
    case ErrorCode::IterationBudgetExceeded:
    case ErrorCode::CholeskyFailure:
        return ErrorCategory::Numerical;
    default:
        return ErrorCategory::Data;
    }
}

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownConfigKey: return "UnknownConfigKey";
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::NonTriangleFace: return "NonTriangleFace";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::RepeatedVertex: return "RepeatedVertex";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::UnreferencedVertex: return "UnreferencedVertex";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::InsufficientEigenvalues: return "InsufficientEigenvalues";
    case ErrorCode::ZeroDescriptor: return "ZeroDescriptor";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingCacheEntry: return "MissingCacheEntry";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::IterationBudgetExceeded: return "IterationBudgetExceeded";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message)
        , m_code(code)
        , m_message(message)
    {}

    ErrorCode code() const noexcept { return m_code; }
    const std::string& message() const noexcept { return m_message; }
    ErrorCategory category() const noexcept { return error_category(m_code); }

private:
    ErrorCode m_code;
    std::string m_message;
};

/// Re-throws `e` with `context` prepended, keeping the error code.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context)
{
    throw Error(e.code(), context + ": " + e.message());
}

} // namespace shapecrp
