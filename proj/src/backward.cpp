#include "fbllr/backward.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbllr/csv.hpp"
#include "fbllr/error.hpp"
#include "fbllr/parallel.hpp"
#include "fbllr/regress.hpp"

namespace fbllr {
namespace {

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

double ensemble_mean(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("ensemble_mean of an empty set");
    // Summing deviations from the first value keeps constant inputs exact.
    const double shift = values[0];
    const std::size_t n = values.size();
    constexpr std::size_t kBlock = 256;
    double buf[kBlock];
    Vec partial;
    partial.reserve(n / kBlock + 1);
    for (std::size_t b = 0; b < n; b += kBlock) {
        const std::size_t len = std::min(kBlock, n - b);
        for (std::size_t i = 0; i < len; ++i) buf[i] = values[b + i] - shift;
        partial.push_back(pairwise_sum(buf, len));
    }
    return shift + pairwise_sum(partial.data(), partial.size()) / static_cast<double>(n);
}

NewtonResult newton_solve_y(double mean_next, double t, std::span<const double> x, std::span<const double> z,
                            const ProblemSpec& problem, double dt, const NewtonConfig& config) {
    auto F = [&](double y) { return y - mean_next - problem.driver(t, x, y, z) * dt; };
    auto dfdy = [&](double y) {
        if (problem.driver_dy) return problem.driver_dy(t, x, y, z);
        const double h = std::max(config.fd_step_base, config.fd_step_base * std::abs(y));
        return (problem.driver(t, x, y + h, z) - problem.driver(t, x, y - h, z)) / (2.0 * h);
    };

    NewtonResult res;
    double y = mean_next;
    double fy = F(y);
    for (int n = 0;; ++n) {
        if (!std::isfinite(fy)) throw NumericalError("Newton residual is not finite");
        if (std::abs(fy) <= config.tol) {
            res.y = y;
            res.iterations = n;
            res.residual = std::abs(fy);
            return res;
        }
        if (n == config.maxiter) break;
        const double jac = 1.0 - dt * dfdy(y);
        if (!(std::abs(jac) >= 1e-12)) {
            throw SingularJacobian("Newton derivative vanished at y = " + format_double(y));
        }
        double step = fy / jac;
        double y_new = y - step;
        double f_new = F(y_new);
        // Halve the step while it does not reduce |F| (non-Lipschitz drivers).
        for (int h = 0; h < 20 && !(std::abs(f_new) < std::abs(fy)); ++h) {
            step *= 0.5;
            y_new = y - step;
            f_new = F(y_new);
            res.damped = true;
        }
        y = y_new;
        fy = f_new;
    }
    throw NonConvergence("Newton did not converge in " + std::to_string(config.maxiter) + " iterations",
                         std::abs(fy));
}

BackwardState backward_step(std::size_t k, const LevelState& level_k, std::span<const double> y_next,
                            const ProblemSpec& problem, const SolverConfig& config) {
    const std::size_t M = level_k.M;
    const std::size_t d = level_k.d;
    if (y_next.size() != M) throw InvalidArgument("backward_step: response count differs from M");
    const double dt = problem.horizon / static_cast<double>(config.N);
    const double t = level_k.t;
    const double mean_next = ensemble_mean(y_next);

    BackwardState st;
    st.k = k;
    st.y_values.resize(M);
    st.newton_iters.resize(M);
    st.newton_residuals.resize(M);
    st.z_norms.resize(M);
    st.cg_iters.resize(M);
    std::vector<char> converged(M, 1), degenerate(M, 0);
    // f ignores z and the mean is global: the fit cannot influence Y.
    const bool skip_regression = config.skip_unused_gradient && !problem.driver_uses_z &&
                                 config.conditional_mean == ConditionalMean::GlobalMean;

    parallel_for(M, config.effective_workers(), [&](std::size_t begin, std::size_t end, std::size_t) {
        RegressionWorkspace ws;
        GradientEstimate unused;
        unused.z.assign(skip_regression ? d : 0, 0.0);
        for (std::size_t m = begin; m < end; ++m) {
            const GradientEstimate g =
                skip_regression ? unused : estimate_gradient(m, level_k, y_next, problem, config, dt, ws);
            const double cond_mean =
                config.conditional_mean == ConditionalMean::GlobalMean ? mean_next : g.regression.alpha;
            NewtonResult nr;
            try {
                nr = newton_solve_y(cond_mean, t, level_k.particle(m), g.z, problem, dt, config.newton);
            } catch (const NonConvergence& e) {
                throw NonConvergence("level " + std::to_string(k) + ", particle " + std::to_string(m) + ": " +
                                         e.what(),
                                     e.residual());
            } catch (const NumericalError& e) {
                throw NumericalError("level " + std::to_string(k) + ", particle " + std::to_string(m) + ": " +
                                     e.what());
            }
            st.y_values[m] = nr.y;
            st.newton_iters[m] = nr.iterations;
            st.newton_residuals[m] = nr.residual;
            double zn = 0.0;
            for (double v : g.z) zn += v * v;
            st.z_norms[m] = std::sqrt(zn);
            st.cg_iters[m] = g.regression.iterations;
            converged[m] = g.regression.converged ? 1 : 0;
            degenerate[m] = (!skip_regression && g.regression.degenerate) ? 1 : 0;
        }
    });
    for (std::size_t m = 0; m < M; ++m) {
        if (!converged[m]) ++st.cg_nonconverged;
        if (degenerate[m]) st.degenerate = true;
    }
    return st;
}

std::string RunReport::status() const {
    if (forward_status == PhaseStatus::Failed) return "forward_failed";
    if (backward_status == PhaseStatus::Failed) return "backward_failed";
    if (forward_status == PhaseStatus::NotRun) return "not_run";
    if (backward_status == PhaseStatus::NotRun) return "backward_not_run";
    return "ok";
}

void RunReport::set_reference(double ref) {
    reference = ref;
    abs_err = std::abs(y0 - ref);
    if (ref != 0.0) rel_err = *abs_err / std::abs(ref);
    else rel_err.reset();
}

std::string RunReport::to_key_value() const {
    std::ostringstream out;
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
    out << "problem = " << problem << '\n'
        << "d = " << d << '\n'
        << "T = " << format_double(T) << '\n'
        << "N = " << N << '\n'
        << "M = " << M << '\n'
        << "seed = " << seed << '\n'
        << "Y0 = " << format_double(y0) << '\n'
        << "ref = " << opt(reference) << '\n'
        << "abs_err = " << opt(abs_err) << '\n'
        << "rel_err = " << opt(rel_err) << '\n'
        << "runtime_s = " << format_double(runtime_s) << '\n'
        << "forward_s = " << format_double(forward_s) << '\n'
        << "backward_s = " << format_double(backward_s) << '\n'
        << "mean_cg_iters = " << format_double(mean_cg_iters) << '\n'
        << "max_cg_iters = " << max_cg_iters << '\n'
        << "cg_nonconverged = " << cg_nonconverged << '\n'
        << "mean_newton_iters = " << format_double(mean_newton_iters) << '\n'
        << "max_newton_iters = " << max_newton_iters << '\n'
        << "max_newton_residual = " << format_double(max_newton_residual) << '\n'
        << "degenerate_levels = " << degenerate_levels << '\n'
        << "storage = " << (storage == PathStore::Mode::Full ? "full" : "checkpointed") << '\n'
        << "resimulated_steps = " << resimulated_steps << '\n'
        << "log_clamps = " << log_clamps << '\n'
        << "status = " << status() << '\n';
    if (!message.empty()) out << "message = " << message << '\n';
    return out.str();
}

namespace {

RunReport make_report(const ProblemSpec& problem, const SolverConfig& config) {
    RunReport r;
    r.problem = problem.name;
    r.d = problem.dimension;
    r.T = problem.horizon;
    r.N = config.N;
    r.M = config.M;
    r.seed = config.seed;
    r.y0 = std::numeric_limits<double>::quiet_NaN();
    return r;
}

void backward_sweep(const ProblemSpec& problem, const SolverConfig& config, const PathStore& store,
                    RunReport& report) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t clamps_before = problem.counters->log_clamps.load();
    try {
        LevelCursor cursor(store, problem, config);
        const LevelState& terminal = cursor.level(config.N);
        Vec y(config.M);
        for (std::size_t j = 0; j < config.M; ++j) y[j] = problem.terminal(terminal.particle(j));

        double cg_total = 0.0, newton_total = 0.0;
        std::size_t cg_count = 0, newton_count = 0;
        for (std::size_t k = config.N; k-- > 0;) {
            const LevelState& level = cursor.level(k);
            BackwardState st = backward_step(k, level, y, problem, config);
            if (st.degenerate) ++report.degenerate_levels;
            for (std::size_t m = 0; m < config.M; ++m) {
                if (!st.degenerate) {
                    cg_total += st.cg_iters[m];
                    ++cg_count;
                    report.max_cg_iters = std::max(report.max_cg_iters, st.cg_iters[m]);
                }
                newton_total += st.newton_iters[m];
                ++newton_count;
                report.max_newton_iters = std::max(report.max_newton_iters, st.newton_iters[m]);
                report.max_newton_residual = std::max(report.max_newton_residual, st.newton_residuals[m]);
            }
            report.cg_nonconverged += st.cg_nonconverged;
            y = std::move(st.y_values);
        }
        report.y0 = ensemble_mean(y);
        if (!std::isfinite(report.y0)) throw NumericalError("Y0 is not finite");
        report.mean_cg_iters = cg_count ? cg_total / static_cast<double>(cg_count) : 0.0;
        report.mean_newton_iters = newton_count ? newton_total / static_cast<double>(newton_count) : 0.0;
        report.resimulated_steps = cursor.resimulated_steps();
        report.backward_status = PhaseStatus::Ok;
    } catch (const Error& e) {
        report.backward_status = PhaseStatus::Failed;
        report.message = e.what();
    }
    report.log_clamps = problem.counters->log_clamps.load() - clamps_before;
    report.backward_s = seconds_since(start);
}

}  // namespace

RunReport run_on_paths(const ProblemSpec& problem, const SolverConfig& config, const PathStore& store) {
    problem.validate();
    config.validate(problem.dimension);
    if (store.N() != config.N || store.M() != config.M || store.d() != problem.dimension) {
        throw InvalidArgument("path store does not match the configuration");
    }
    RunReport report = make_report(problem, config);
    report.storage = store.mode();
    report.forward_status = PhaseStatus::Ok;
    backward_sweep(problem, config, store, report);
    report.runtime_s = report.backward_s;
    return report;
}

RunReport run(const ProblemSpec& problem, const SolverConfig& config) {
    problem.validate();
    config.validate(problem.dimension);
    RunReport report = make_report(problem, config);
    const auto start = std::chrono::steady_clock::now();
    std::optional<PathStore> store;
    try {
        store.emplace(simulate_paths(problem, config));
        report.storage = store->mode();
        report.forward_status = PhaseStatus::Ok;
    } catch (const Error& e) {
        report.forward_status = PhaseStatus::Failed;
        report.message = e.what();
    }
    report.forward_s = seconds_since(start);
    if (store) backward_sweep(problem, config, *store, report);
    report.runtime_s = seconds_since(start);
    return report;
}

}  // namespace fbllr
