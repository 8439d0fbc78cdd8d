#ifndef RELFLOW_ERRORS_HPP
#define RELFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace relflow {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid user input: bad configuration, malformed schedule, missing seed.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A density evaluator returned a non-finite value. Carries the offending point.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& msg, std::string point_repr)
        : Error(msg + " at " + point_repr), point(std::move(point_repr)) {}
    std::string point;
};

/// Switch-budget arithmetic overflowed (budget effectively unbounded).
class BudgetError : public Error {
public:
    explicit BudgetError(const std::string& msg, double achieved = -1.0)
        : Error(msg), achieved_value(achieved) {}
    double achieved_value;
};

/// Deterministic search (truncation, separating vector, ...) hit its iteration cap.
class SearchExhaustedError : public Error {
public:
    SearchExhaustedError(const std::string& msg, double best_R, double best_h)
        : Error(msg), R(best_R), h(best_h) {}
    double R, h;
};

/// Piece count of an exact pushforward exceeded the configured cap.
class ComplexityError : public Error {
public:
    ComplexityError(const std::string& msg, std::size_t count)
        : Error(msg), piece_count(count) {}
    std::size_t piece_count;
};

/// A matrix expected to be symmetric positive definite was not.
class SpectralError : public Error {
public:
    using Error::Error;
};

/// Tail-domination certification failed. Carries the worst density ratio seen.
class CertificationError : public Error {
public:
    explicit CertificationError(const std::string& msg, double worst = -1.0)
        : Error(msg), worst_ratio(worst) {}
    double worst_ratio;
};

/// Numerically coincident points where pairwise distinctness is required.
class DistinctnessError : public Error {
public:
    using Error::Error;
};

/// Rank condition failed along an interpolation path. Carries the offending s.
class RankError : public Error {
public:
    RankError(const std::string& msg, double s_param)
        : Error(msg), s(s_param) {}
    double s;
};

/// Density ratio unbounded / support violation in a divergence integrand.
class AbsoluteContinuityError : public Error {
public:
    AbsoluteContinuityError(const std::string& msg, std::string witness_repr)
        : Error(msg + " at " + witness_repr), witness(std::move(witness_repr)) {}
    std::string witness;
};

} // namespace relflow

#endif
