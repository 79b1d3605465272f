#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace fbllr {

enum class KernelKind { Gaussian, Epanechnikov };

/// K(r) = exp(-r^2) (Gaussian) or max(0, 1 - r^2) (Epanechnikov).
struct KernelSpec {
    KernelKind kind = KernelKind::Gaussian;
    double operator()(double r) const noexcept;
    bool operator==(const KernelSpec&) const = default;
};

enum class BandwidthKind { MaxDistance, ScaledSqrtDt, Fixed };

struct BandwidthRule {
    BandwidthKind kind = BandwidthKind::MaxDistance;
    double value = 1.0;  // c for ScaledSqrtDt, eps for Fixed

    static BandwidthRule max_distance() { return {BandwidthKind::MaxDistance, 1.0}; }
    static BandwidthRule scaled_sqrt_dt(double c) { return {BandwidthKind::ScaledSqrtDt, c}; }
    static BandwidthRule fixed(double eps) { return {BandwidthKind::Fixed, eps}; }
    bool operator==(const BandwidthRule&) const = default;
};

struct NewtonConfig {
    double tol = 1e-12;
    int maxiter = 50;
    double fd_step_base = 1e-6;
    bool operator==(const NewtonConfig&) const = default;
};

/// How the conditional expectation E[Y_{k+1} | X_k^m] is approximated.
///  GlobalMean: the plain ensemble average, identical for every particle.
///  LocalIntercept: the intercept of the anchor's local linear fit.
enum class ConditionalMean { GlobalMean, LocalIntercept };

struct SolverConfig {
    std::size_t N = 1000;  // time steps
    std::size_t M = 100;   // particles
    std::uint64_t seed = 42;
    KernelSpec kernel;
    BandwidthRule bandwidth;
    /// Ridge weight; empty selects 1e-8 * sum_j w_j |D_j|^2 / d per anchor.
    std::optional<double> ridge_lambda;
    double cg_tol = 1e-10;
    /// Empty selects min(10 (d + 1), 2000).
    std::optional<int> cg_maxiter;
    NewtonConfig newton;
    std::size_t memory_budget_bytes = std::size_t{4096} << 20;
    /// Empty selects ceil(sqrt(N)) when checkpointing is needed.
    std::optional<std::size_t> checkpoint_stride;
    ConditionalMean conditional_mean = ConditionalMean::GlobalMean;
    /// Skip the gradient fit when the driver ignores z and the global mean is
    /// used; Y is then bitwise unchanged.
    bool skip_unused_gradient = true;
    /// Worker threads for the particle loops; 0 means hardware concurrency.
    std::size_t workers = 0;

    int effective_cg_maxiter(std::size_t d) const;
    std::size_t effective_workers() const;
    /// Throws ConfigError on inconsistent settings for dimension d.
    void validate(std::size_t d) const;
    bool operator==(const SolverConfig&) const = default;
};

}  // namespace fbllr
