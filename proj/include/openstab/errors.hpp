#pragma once

#include <stdexcept>
#include <string>

namespace openstab {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed system file. Positions are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line(line),
          column(column) {}

    int line;
    int column;
};

// Incompatible sizes between a system, a point, a matrix, or a law.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Arithmetic left the expression domain (sqrt of a negative number, division
// by zero, derivative of abs/sqrt at zero). `component` is the 1-based index
// of the offending equation, 0 when not attributable.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg, int component = 0)
        : Error(component > 0 ? "f" + std::to_string(component) + ": " + msg : msg),
          component(component) {}

    int component;
};

// A matrix failed a rank precondition (e.g. right pseudoinverse of a
// row-rank-deficient matrix).
class RankError : public Error {
public:
    using Error::Error;
};

// Hypothesis sampling failed before an iterative synthesis was started.
class PreflightError : public Error {
public:
    using Error::Error;
};

// An internal cross-check failed. Signals a tolerance misconfiguration or an
// implementation defect, never bad user input.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

}  // namespace openstab
