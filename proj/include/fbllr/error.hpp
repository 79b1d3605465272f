#pragma once

#include <stdexcept>
#include <string>

namespace fbllr {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failures (blow-up, degenerate neighbourhoods, Newton failure).
class NumericalError : public Error {
public:
    using Error::Error;
};

class NumericalBlowup : public NumericalError {
public:
    NumericalBlowup(std::size_t particle, std::size_t level)
        : NumericalError("non-finite position for particle " + std::to_string(particle) +
                         " at level " + std::to_string(level)),
          particle_(particle), level_(level) {}
    std::size_t particle() const noexcept { return particle_; }
    std::size_t level() const noexcept { return level_; }

private:
    std::size_t particle_;
    std::size_t level_;
};

class DegenerateNeighborhood : public NumericalError {
public:
    explicit DegenerateNeighborhood(std::size_t anchor, const std::string& why = "all kernel weights vanish")
        : NumericalError("degenerate neighbourhood at anchor " + std::to_string(anchor) + ": " + why),
          anchor_(anchor) {}
    std::size_t anchor() const noexcept { return anchor_; }

private:
    std::size_t anchor_;
};

class SingularJacobian : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonConvergence : public NumericalError {
public:
    NonConvergence(const std::string& what, double residual)
        : NumericalError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace fbllr
