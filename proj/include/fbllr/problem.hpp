#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbllr/diffusion.hpp"

namespace fbllr {

using DriftFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
using DriverFn = std::function<double(double t, std::span<const double> x, double y, std::span<const double> z)>;
using TerminalFn = std::function<double(std::span<const double> x)>;
using ScalarFieldFn = std::function<double(double t, std::span<const double> x)>;
using VectorFieldFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

/// Closed-form solution of a test problem. `u` and `grad_u` are mandatory;
/// the derivative pieces are only needed to build manufactured sources.
struct ExactSolution {
    ScalarFieldFn u;
    VectorFieldFn grad_u;
    ScalarFieldFn dt_u;
    ScalarFieldFn laplacian;
    VectorFieldFn hessian_diag;
};

/// Shared event counters; the only mutable part of an otherwise immutable problem.
struct DiagnosticCounters {
    std::atomic<std::uint64_t> log_clamps{0};
};

/// A semilinear parabolic problem
///   (d/dt + L) u + f(t, x, u, sigma^T grad u) = 0,  u(T, .) = g,
/// with L the generator of dX = mu dt + sigma dW.
struct ProblemSpec {
    std::string name;
    std::size_t dimension = 1;
    double horizon = 1.0;
    Vec query_point;
    DriftFn drift;  // empty means zero drift
    DiffusionSpec diffusion;
    DriverFn driver;
    DriverFn driver_dy;  // optional analytic df/dy
    TerminalFn terminal;
    std::optional<ExactSolution> exact;
    /// Literature value of u(0, query_point) for problems without a closed form.
    std::optional<double> cited_reference;
    /// False when f ignores z; the gradient is then still estimated but only
    /// reported as a diagnostic.
    bool driver_uses_z = true;
    std::shared_ptr<DiagnosticCounters> counters = std::make_shared<DiagnosticCounters>();

    bool has_drift() const noexcept { return static_cast<bool>(drift); }

    /// Throws InvalidArgument when an invariant is broken (d, T, sigma,
    /// missing callables, terminal inconsistent with the exact solution).
    void validate() const;
};

/// Key/value parameters for built-in problems. Scalars are stored as
/// one-element vectors.
class ProblemParams {
public:
    ProblemParams& set(const std::string& key, double value);
    ProblemParams& set(const std::string& key, Vec value);

    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    double scalar(const std::string& key, double fallback) const;
    /// Vector of length d; a stored scalar is broadcast.
    Vec vector(const std::string& key, std::size_t d, double fallback) const;

    const std::map<std::string, Vec>& values() const noexcept { return values_; }
    bool operator==(const ProblemParams&) const = default;

private:
    std::map<std::string, Vec> values_;
};

/// Names accepted by builtin_problem.
const std::vector<std::string>& builtin_problem_names();

/// Parameter keys accepted for a given builtin (including the common T, x0).
std::vector<std::string> builtin_problem_keys(const std::string& name);

/// Builds one of the benchmark problems. Throws NotFound for an unknown name
/// and InvalidArgument for bad parameters.
ProblemSpec builtin_problem(const std::string& name, std::size_t d, const ProblemParams& params = {});

/// Nonlinearity expressed in terms of u and grad u (not z).
using GradNonlinearityFn = std::function<double(double t, std::span<const double> x, double u,
                                                std::span<const double> grad_u)>;

/// source(t,x) = -(du/dt + L u)(t,x) - nonlinearity(t, x, u, grad u), so that
/// `exact` solves the PDE with driver nonlinearity + source. Needs dt_u and
/// laplacian (isotropic sigma) or hessian_diag (diagonal sigma).
ScalarFieldFn manufactured_source(const ExactSolution& exact, const DiffusionSpec& diffusion,
                                  const DriftFn& drift, GradNonlinearityFn nonlinearity);

/// L u at (t, x) from the analytic pieces of `exact`.
double apply_generator(const ExactSolution& exact, const DiffusionSpec& diffusion, const DriftFn& drift,
                       double t, std::span<const double> x);

}  // namespace fbllr
