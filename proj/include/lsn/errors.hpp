#pragma once

#include <stdexcept>
#include <string>

namespace lsn {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Model construction rejected (outflow regime, bad exponents, degenerate rates).
class invalid_model_error : public error {
public:
    using error::error;
};

/// A rate was evaluated where it is undefined (e.g. b/a at a point with a(x)=0).
class degenerate_input_error : public error {
public:
    using error::error;
};

/// A structural hypothesis failed hard enough that a computation cannot proceed
/// (e.g. 1/a not integrable at 0, so the stretched coordinate does not exist).
class hypothesis_error : public error {
public:
    using error::error;
};

/// The monomer path does not stay above the dissolution threshold near size 0,
/// so the inward-flow margin required by the boundary machinery does not exist.
class inflow_violation_error : public error {
public:
    using error::error;
};

/// Adaptive ODE integration failed (step underflow or step budget exhausted).
/// The message carries the location of the failure.
class integrator_error : public error {
public:
    using error::error;
};

/// Adaptive quadrature failed to converge within its subdivision budget.
class quadrature_error : public error {
public:
    using error::error;
};

/// A fixed-point window failed to converge; the message suggests remedies.
class window_failure_error : public error {
public:
    using error::error;
};

/// Scenario configuration could not be parsed or contains unknown keys.
class config_error : public error {
public:
    using error::error;
};

} // namespace lsn
