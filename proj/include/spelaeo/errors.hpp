#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spelaeo {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or inconsistent input data. The CLI maps these to exit code 2.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Numerical degeneracy (singular system, flat signal, ...). Exit code 3.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

#define SPELAEO_ERROR(NAME, BASE)                                   \
    class NAME : public BASE {                                      \
    public:                                                         \
        explicit NAME(const std::string& msg) : BASE(msg) {}        \
    };

SPELAEO_ERROR(EmptyInput, ValidationError)
SPELAEO_ERROR(EmptyTrajectory, ValidationError)
SPELAEO_ERROR(TooFewSamples, ValidationError)
SPELAEO_ERROR(TooFewObservations, ValidationError)
SPELAEO_ERROR(InsufficientOverlap, ValidationError)
SPELAEO_ERROR(UnmatchedObservation, ValidationError)
SPELAEO_ERROR(FrameMismatch, ValidationError)
SPELAEO_ERROR(RangeError, ValidationError)
SPELAEO_ERROR(InconsistentSegment, ValidationError)
SPELAEO_ERROR(DisconnectedStation, ValidationError)
SPELAEO_ERROR(PatternError, ValidationError)
SPELAEO_ERROR(SpecError, ValidationError)

SPELAEO_ERROR(DegenerateMean, NumericalError)
SPELAEO_ERROR(FlatSignal, NumericalError)
SPELAEO_ERROR(DegenerateRegression, NumericalError)
SPELAEO_ERROR(DegenerateHeading, NumericalError)
SPELAEO_ERROR(SingularSystem, NumericalError)

#undef SPELAEO_ERROR

// Parse failure with a 1-based source line attached when known.
class ParseError : public ValidationError {
public:
    explicit ParseError(const std::string& msg) : ValidationError(msg), line_(0) {}
    ParseError(std::size_t line, const std::string& msg)
        : ValidationError("line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace spelaeo
