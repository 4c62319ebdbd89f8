#pragma once

#include <stdexcept>
#include <string>

namespace sfl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NotObservable : Error { using Error::Error; };
struct TooShort : Error { using Error::Error; };
struct InitTooShort : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct BasisMismatch : Error { using Error::Error; };
struct UnsupportedDistribution : Error { using Error::Error; };
struct NotPersistentlyExciting : Error { using Error::Error; };
struct InfeasibleInit : Error { using Error::Error; };
struct InfeasibleStack : Error { using Error::Error; };
struct RankDeficientData : Error { using Error::Error; };
struct RankDeficientSolve : Error { using Error::Error; };
struct CausalityViolation : Error { using Error::Error; };
struct MaxIterationsExceeded : Error { using Error::Error; };
struct PlantUnbounded : Error { using Error::Error; };
struct InvalidBounds : Error { using Error::Error; };
struct SolverFailure : Error { using Error::Error; };
struct InfeasibleProblem : SolverFailure { using SolverFailure::SolverFailure; };
struct UnboundedProblem : SolverFailure { using SolverFailure::SolverFailure; };
struct NumericalBreakdown : SolverFailure { using SolverFailure::SolverFailure; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

} // namespace sfl
