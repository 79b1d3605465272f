#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbllr/backward.hpp"
#include "fbllr/problem.hpp"
#include "fbllr/solver_config.hpp"

namespace fbllr {

/// u(t, x) from the exact solution when there is one; otherwise the cited
/// literature value at (0, query_point); otherwise empty.
std::optional<double> reference_value(const ProblemSpec& problem, double t, std::span<const double> x);

enum class ReferenceKind { Exact, Cited, None };

/// Exact resolves through reference_value at (0, x0). Cited carries its own value.
struct ReferenceSpec {
    ReferenceKind kind = ReferenceKind::Exact;
    double value = 0.0;

    static ReferenceSpec exact() { return {ReferenceKind::Exact, 0.0}; }
    static ReferenceSpec cited(double v) { return {ReferenceKind::Cited, v}; }
    static ReferenceSpec none() { return {ReferenceKind::None, 0.0}; }
    bool operator==(const ReferenceSpec&) const = default;
};

struct SweepPlan {
    std::string problem;
    std::size_t d = 1;
    ProblemParams params;
    std::vector<std::size_t> N_values;  // strictly increasing
    std::vector<std::size_t> M_values;
    std::size_t seeds_per_cell = 5;
    ReferenceSpec reference;
    /// Runs cells concurrently, one worker each. Runtimes are then not
    /// recorded (NaN) since cells contend for cores.
    bool parallel_cells = false;

    /// Throws InvalidArgument.
    void validate() const;
    bool operator==(const SweepPlan&) const = default;
};

struct SweepRow {
    std::size_t N = 0;
    std::size_t M = 0;
    std::uint64_t seed = 0;
    double y0 = 0.0;
    std::optional<double> reference;
    std::optional<double> abs_err;
    std::optional<double> rel_err;
    double runtime_s = 0.0;
    double forward_s = 0.0;
    double mean_cg_iters = 0.0;
    double mean_newton_iters = 0.0;
    std::string status;
    std::string message;
};

/// Seed-averaged errors at one (N, M) cell.
struct ErrorPoint {
    std::size_t N = 0;
    std::size_t M = 0;
    double dt = 0.0;
    double mean_abs_err = 0.0;
    double mean_rel_err = 0.0;  // NaN when the reference is zero
    double mean_y0 = 0.0;
    std::size_t samples = 0;
};

struct SweepResult {
    std::string problem;
    std::size_t d = 0;
    double T = 0.0;
    std::vector<SweepRow> rows;
    std::vector<ErrorPoint> points;  // by M, then N
    std::map<std::size_t, double> fitted_slope;  // per M; missing with < 2 usable N

    std::vector<ErrorPoint> points_for(std::size_t M) const;
    /// Seed-averaged error at the largest N for this M.
    std::optional<ErrorPoint> finest(std::size_t M) const;
};

using RunFn = std::function<RunReport(const ProblemSpec&, const SolverConfig&)>;
using RowCallback = std::function<void(const SweepRow&)>;

/// Runs every (N, M, seed) cell. Cell seeds are config_base.seed + i for
/// i < seeds_per_cell. Failures are recorded in the row and the sweep goes
/// on. `runner` replaces run() (tests inject synthetic errors through it).
SweepResult run_sweep(const SweepPlan& plan, const SolverConfig& config_base, const RunFn& runner = {},
                      const RowCallback& on_row = {});

/// Seed-averages ok rows into points and fits the slope for each M.
void summarize(SweepResult& result);

/// OLS slope of log(err) against log(dt). Needs >= 2 points with distinct
/// dt > 0; err <= 0 is an InvalidArgument.
double fit_slope(std::span<const std::pair<double, double>> points);

struct ScalingRow {
    std::size_t N = 0;
    std::size_t M = 0;
    double runtime_s = 0.0;
    double forward_s = 0.0;
    double backward_s = 0.0;
    std::string status;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    /// Log-log exponent of runtime in N at the largest M, and in M at the largest N.
    std::optional<double> n_exponent;
    std::optional<double> m_exponent;
    /// runtime(N_{i+1}) / runtime(N_i) at the largest M.
    std::vector<double> n_ratios;
};

/// Times run() on the N x M grid (one seed, sequential).
ScalingReport scaling_report(const ProblemSpec& problem, const SolverConfig& config,
                             const std::vector<std::size_t>& N_list, const std::vector<std::size_t>& M_list);

/// Regression gradient against the exact one on a single level: responses
/// are exact u(t_{k+1}, X_{k+1}), the target is sigma^T grad u(t_k, X_k).
struct GradientTestReport {
    std::size_t level = 0;
    double t = 0.0;
    double mean_rel_err = 0.0;  // mean over anchors of |z_hat - z| / |z|
    double max_rel_err = 0.0;
    double mean_cos = 0.0;      // mean cosine between z_hat and z
    double mean_cg_iters = 0.0;
};

/// Needs an exact solution. Level defaults to N / 2.
GradientTestReport gradient_test(const ProblemSpec& problem, const SolverConfig& config,
                                 std::optional<std::size_t> level = {});

}  // namespace fbllr
