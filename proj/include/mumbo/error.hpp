#ifndef MUMBO_ERROR_HPP
#define MUMBO_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mumbo {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    DegenerateCorrelation,
    NumericalUnderflow,
    NonFiniteValue,
    NotPositiveDefinite,
    OptimizationFailure,
    BinarySearchFailure,
    QuadratureNegativity,
    ZeroCost,
    OutOfBounds,
    UnknownOptimum,
    UnsupportedFidelity,
    ConfigError,
    IoError,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::DegenerateCorrelation: return "degenerate correlation";
    case ErrorCode::NumericalUnderflow: return "numerical underflow";
    case ErrorCode::NonFiniteValue: return "non-finite value";
    case ErrorCode::NotPositiveDefinite: return "not positive definite";
    case ErrorCode::OptimizationFailure: return "optimization failure";
    case ErrorCode::BinarySearchFailure: return "binary search failure";
    case ErrorCode::QuadratureNegativity: return "quadrature negativity";
    case ErrorCode::ZeroCost: return "zero cost";
    case ErrorCode::OutOfBounds: return "out of bounds";
    case ErrorCode::UnknownOptimum: return "unknown optimum";
    case ErrorCode::UnsupportedFidelity: return "unsupported fidelity";
    case ErrorCode::ConfigError: return "config error";
    case ErrorCode::IoError: return "io error";
    }
    return "unknown error";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace mumbo

#endif
