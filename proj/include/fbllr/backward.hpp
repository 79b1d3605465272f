#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbllr/paths.hpp"
#include "fbllr/problem.hpp"
#include "fbllr/solver_config.hpp"

namespace fbllr {

/// Mean via pairwise (tree) summation of deviations from the first value.
/// Constant inputs are returned exactly. The tree shape depends only on n,
/// so the result is bitwise reproducible.
double ensemble_mean(std::span<const double> values);

struct NewtonResult {
    double y = 0.0;
    int iterations = 0;
    double residual = 0.0;  // |F(y)|
    bool damped = false;    // a step had to be shortened
};

/// Solves F(y) = y - mean_next - f(t, x, y, z) dt = 0 starting from
/// y = mean_next. df/dy comes from problem.driver_dy or a central difference
/// with step max(h, h |y|). Throws SingularJacobian when |F'| < 1e-12 and
/// NonConvergence after maxiter iterations.
NewtonResult newton_solve_y(double mean_next, double t, std::span<const double> x, std::span<const double> z,
                            const ProblemSpec& problem, double dt, const NewtonConfig& config);

/// Per-level output of the backward sweep.
struct BackwardState {
    std::size_t k = 0;
    Vec y_values;
    std::vector<int> newton_iters;
    Vec newton_residuals;
    Vec z_norms;
    std::vector<int> cg_iters;
    std::size_t cg_nonconverged = 0;
    bool degenerate = false;  // particles coincide, gradients set to zero
};

/// One level k: gradient regression for every anchor against Y_{k+1}, then
/// the scalar Newton closure. The conditional mean is shared across
/// particles (GlobalMean) or taken from each anchor's intercept.
BackwardState backward_step(std::size_t k, const LevelState& level_k, std::span<const double> y_next,
                            const ProblemSpec& problem, const SolverConfig& config);

enum class PhaseStatus { NotRun, Ok, Failed };

struct RunReport {
    std::string problem;
    std::size_t d = 0;
    double T = 0.0;
    std::size_t N = 0;
    std::size_t M = 0;
    std::uint64_t seed = 0;

    double y0 = 0.0;
    std::optional<double> reference;
    std::optional<double> abs_err;
    std::optional<double> rel_err;

    double runtime_s = 0.0;
    double forward_s = 0.0;
    double backward_s = 0.0;

    double mean_cg_iters = 0.0;
    int max_cg_iters = 0;
    std::size_t cg_nonconverged = 0;
    double mean_newton_iters = 0.0;
    int max_newton_iters = 0;
    double max_newton_residual = 0.0;
    std::size_t degenerate_levels = 0;
    std::size_t resimulated_steps = 0;
    PathStore::Mode storage = PathStore::Mode::Full;
    std::uint64_t log_clamps = 0;

    PhaseStatus forward_status = PhaseStatus::NotRun;
    PhaseStatus backward_status = PhaseStatus::NotRun;
    std::string message;

    bool ok() const noexcept { return forward_status == PhaseStatus::Ok && backward_status == PhaseStatus::Ok; }
    /// "ok", or "<phase>_failed".
    std::string status() const;
    /// Fills abs_err / rel_err (rel only for a nonzero reference).
    void set_reference(double ref);
    /// Flat `key = value` block, one entry per line.
    std::string to_key_value() const;
};

/// Full solve: forward simulation, terminal values, backward sweep, Y0.
/// Invalid configurations throw ConfigError; numerical failures are recorded
/// in the report's phase status instead.
RunReport run(const ProblemSpec& problem, const SolverConfig& config);

/// Y0 from an explicit list of backward levels, for callers that already hold
/// the paths (tests, diagnostics).
RunReport run_on_paths(const ProblemSpec& problem, const SolverConfig& config, const PathStore& store);

}  // namespace fbllr
