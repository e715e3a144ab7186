#pragma once

#include <stdexcept>
#include <string>

namespace bgnn {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dimension mismatch between operands.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

/// An API contract was violated (e.g. non-scalar loss, bad argument).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error("contract error: " + msg) {}
};

/// A matrix expected to be positive definite was not.
class SingularError : public Error {
public:
    explicit SingularError(const std::string& msg) : Error("singularity error: " + msg) {}
};

/// An iterative solver exhausted its iteration budget.
class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& msg) : Error("convergence error: " + msg) {}
};

/// A problem instance does not admit the requested solution (e.g. ZF with N < K).
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& msg) : Error("infeasible: " + msg) {}
};

/// Invalid configuration (unknown keys, bad values).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

/// Non-finite values encountered where finite ones are required.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric error: " + msg) {}
};

} // namespace bgnn
