#include "fbllr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbllr/error.hpp"
#include "fbllr/parallel.hpp"
#include "fbllr/paths.hpp"
#include "fbllr/regress.hpp"

namespace fbllr {

std::optional<double> reference_value(const ProblemSpec& problem, double t, std::span<const double> x) {
    if (problem.exact) return problem.exact->u(t, x);
    if (problem.cited_reference && t == 0.0 && x.size() == problem.query_point.size() &&
        std::equal(x.begin(), x.end(), problem.query_point.begin())) {
        return problem.cited_reference;
    }
    return std::nullopt;
}

void SweepPlan::validate() const {
    if (problem.empty()) throw InvalidArgument("sweep: problem name is empty");
    if (d < 1) throw InvalidArgument("sweep: d must be >= 1");
    if (N_values.empty()) throw InvalidArgument("sweep: no N values");
    if (M_values.empty()) throw InvalidArgument("sweep: no M values");
    for (std::size_t i = 0; i < N_values.size(); ++i) {
        if (N_values[i] < 1) throw InvalidArgument("sweep: N values must be >= 1");
        if (i > 0 && N_values[i] <= N_values[i - 1]) {
            throw InvalidArgument("sweep: N values must be strictly increasing");
        }
    }
    for (std::size_t m : M_values) {
        if (m < 2) throw InvalidArgument("sweep: M values must be >= 2");
    }
    if (seeds_per_cell < 1) throw InvalidArgument("sweep: seeds_per_cell must be >= 1");
    if (reference.kind == ReferenceKind::Cited && (!std::isfinite(reference.value) || reference.value == 0.0)) {
        throw InvalidArgument("sweep: cited reference must be finite and nonzero");
    }
}

std::vector<ErrorPoint> SweepResult::points_for(std::size_t M) const {
    std::vector<ErrorPoint> out;
    for (const auto& p : points) {
        if (p.M == M) out.push_back(p);
    }
    return out;
}

std::optional<ErrorPoint> SweepResult::finest(std::size_t M) const {
    std::optional<ErrorPoint> best;
    for (const auto& p : points) {
        if (p.M == M && (!best || p.N > best->N)) best = p;
    }
    return best;
}

double fit_slope(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw InvalidArgument("fit_slope needs at least 2 points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [dt, err] : points) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("fit_slope: dt must be positive");
        if (!(err > 0.0) || !std::isfinite(err)) throw InvalidArgument("fit_slope: error must be positive");
        sx += std::log(dt);
        sy += std::log(err);
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [dt, err] : points) {
        const double lx = std::log(dt) - mx;
        sxx += lx * lx;
        sxy += lx * (std::log(err) - my);
    }
    if (sxx == 0.0) throw InvalidArgument("fit_slope: dt values must be distinct");
    return sxy / sxx;
}

void summarize(SweepResult& result) {
    result.points.clear();
    result.fitted_slope.clear();
    std::vector<std::size_t> Ms, Ns;
    for (const auto& r : result.rows) {
        if (std::find(Ms.begin(), Ms.end(), r.M) == Ms.end()) Ms.push_back(r.M);
        if (std::find(Ns.begin(), Ns.end(), r.N) == Ns.end()) Ns.push_back(r.N);
    }
    std::sort(Ns.begin(), Ns.end());
    for (std::size_t M : Ms) {
        std::vector<std::pair<double, double>> fit;
        for (std::size_t N : Ns) {
            ErrorPoint p;
            p.N = N;
            p.M = M;
            p.dt = result.T / static_cast<double>(N);
            double abs_sum = 0.0, rel_sum = 0.0, y_sum = 0.0;
            bool has_rel = true;
            for (const auto& r : result.rows) {
                if (r.N != N || r.M != M || r.status != "ok" || !r.abs_err) continue;
                abs_sum += *r.abs_err;
                y_sum += r.y0;
                if (r.rel_err) rel_sum += *r.rel_err;
                else has_rel = false;
                ++p.samples;
            }
            if (p.samples == 0) continue;
            const double n = static_cast<double>(p.samples);
            p.mean_abs_err = abs_sum / n;
            p.mean_rel_err = has_rel ? rel_sum / n : std::numeric_limits<double>::quiet_NaN();
            p.mean_y0 = y_sum / n;
            result.points.push_back(p);
            if (p.mean_abs_err > 0.0) fit.emplace_back(p.dt, p.mean_abs_err);
        }
        if (fit.size() >= 2) result.fitted_slope[M] = fit_slope(fit);
    }
}

SweepResult run_sweep(const SweepPlan& plan, const SolverConfig& config_base, const RunFn& runner,
                      const RowCallback& on_row) {
    plan.validate();
    const ProblemSpec problem = builtin_problem(plan.problem, plan.d, plan.params);
    std::optional<double> ref;
    switch (plan.reference.kind) {
        case ReferenceKind::Exact:
            ref = reference_value(problem, 0.0, problem.query_point);
            if (!ref) throw InvalidArgument("sweep: problem '" + plan.problem + "' has no reference value");
            break;
        case ReferenceKind::Cited:
            ref = plan.reference.value;
            break;
        case ReferenceKind::None:
            break;
    }
    if (ref && *ref == 0.0) throw InvalidArgument("sweep: reference value is zero, relative error undefined");

    SweepResult result;
    result.problem = plan.problem;
    result.d = plan.d;
    result.T = problem.horizon;

    struct Cell {
        std::size_t N, M;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t M : plan.M_values) {
        for (std::size_t N : plan.N_values) {
            for (std::size_t s = 0; s < plan.seeds_per_cell; ++s) cells.push_back({N, M, config_base.seed + s});
        }
    }
    result.rows.resize(cells.size());

    auto run_cell = [&](std::size_t i, std::size_t workers) {
        const Cell& c = cells[i];
        SolverConfig cfg = config_base;
        cfg.N = c.N;
        cfg.M = c.M;
        cfg.seed = c.seed;
        if (workers) cfg.workers = workers;
        SweepRow row;
        row.N = c.N;
        row.M = c.M;
        row.seed = c.seed;
        try {
            RunReport rep = runner ? runner(problem, cfg) : run(problem, cfg);
            row.y0 = rep.y0;
            row.runtime_s = rep.runtime_s;
            row.forward_s = rep.forward_s;
            row.mean_cg_iters = rep.mean_cg_iters;
            row.mean_newton_iters = rep.mean_newton_iters;
            row.status = rep.status();
            row.message = rep.message;
        } catch (const Error& e) {
            row.y0 = std::numeric_limits<double>::quiet_NaN();
            row.status = "config_error";
            row.message = e.what();
        }
        if (ref) {
            row.reference = ref;
            if (row.status == "ok") {
                row.abs_err = std::abs(row.y0 - *ref);
                row.rel_err = *row.abs_err / std::abs(*ref);
            }
        }
        if (plan.parallel_cells) {
            row.runtime_s = std::numeric_limits<double>::quiet_NaN();
            row.forward_s = std::numeric_limits<double>::quiet_NaN();
        }
        result.rows[i] = std::move(row);
    };

    if (plan.parallel_cells) {
        const std::size_t workers = config_base.effective_workers();
        parallel_for(cells.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t) {
            for (std::size_t i = begin; i < end; ++i) run_cell(i, 1);
        });
        if (on_row) {
            for (const auto& r : result.rows) on_row(r);
        }
    } else {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            run_cell(i, 0);
            if (on_row) on_row(result.rows[i]);
        }
    }
    summarize(result);
    return result;
}

namespace {

std::optional<double> loglog_exponent(const std::vector<std::pair<double, double>>& xy) {
    if (xy.size() < 2) return std::nullopt;
    for (const auto& [x, y] : xy) {
        if (!(x > 0.0) || !(y > 0.0)) return std::nullopt;
    }
    return fit_slope(xy);
}

}  // namespace

ScalingReport scaling_report(const ProblemSpec& problem, const SolverConfig& config,
                             const std::vector<std::size_t>& N_list, const std::vector<std::size_t>& M_list) {
    if (N_list.empty() || M_list.empty()) throw InvalidArgument("scaling_report: empty N or M list");
    ScalingReport rep;
    for (std::size_t M : M_list) {
        for (std::size_t N : N_list) {
            SolverConfig cfg = config;
            cfg.N = N;
            cfg.M = M;
            const RunReport r = run(problem, cfg);
            rep.rows.push_back({N, M, r.runtime_s, r.forward_s, r.backward_s, r.status()});
        }
    }
    const std::size_t M_big = *std::max_element(M_list.begin(), M_list.end());
    const std::size_t N_big = *std::max_element(N_list.begin(), N_list.end());
    std::vector<std::pair<double, double>> by_n, by_m;
    std::vector<ScalingRow> n_rows;
    for (const auto& row : rep.rows) {
        if (row.status != "ok") continue;
        if (row.M == M_big) {
            by_n.emplace_back(static_cast<double>(row.N), row.runtime_s);
            n_rows.push_back(row);
        }
        if (row.N == N_big) by_m.emplace_back(static_cast<double>(row.M), row.runtime_s);
    }
    rep.n_exponent = loglog_exponent(by_n);
    rep.m_exponent = loglog_exponent(by_m);
    std::sort(n_rows.begin(), n_rows.end(), [](const auto& a, const auto& b) { return a.N < b.N; });
    for (std::size_t i = 1; i < n_rows.size(); ++i) {
        rep.n_ratios.push_back(n_rows[i].runtime_s / n_rows[i - 1].runtime_s);
    }
    return rep;
}

GradientTestReport gradient_test(const ProblemSpec& problem, const SolverConfig& config,
                                 std::optional<std::size_t> level) {
    problem.validate();
    config.validate(problem.dimension);
    if (!problem.exact) throw InvalidArgument("gradient_test needs an exact solution");
    const std::size_t k = level.value_or(config.N / 2);
    if (k >= config.N) throw InvalidArgument("gradient_test: level must be < N");
    const std::size_t M = config.M;
    const std::size_t d = problem.dimension;
    const double dt = problem.horizon / static_cast<double>(config.N);

    const PathStore store = simulate_paths(problem, config);
    const LevelState here = restore_level(store, k, problem, config);
    const LevelState next = restore_level(store, k + 1, problem, config);
    Vec y(M);
    for (std::size_t j = 0; j < M; ++j) y[j] = problem.exact->u(next.t, next.particle(j));

    GradientTestReport rep;
    rep.level = k;
    rep.t = here.t;
    RegressionWorkspace ws;
    std::size_t counted = 0;
    for (std::size_t m = 0; m < M; ++m) {
        const GradientEstimate g = estimate_gradient(m, here, y, problem, config, dt, ws);
        Vec grad(d);
        problem.exact->grad_u(here.t, here.particle(m), grad);
        const Vec z = apply_diffusion_transpose(problem.diffusion, here.t, here.particle(m), grad);
        double zz = 0.0, ee = 0.0, hh = 0.0, zh = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            zz += z[i] * z[i];
            hh += g.z[i] * g.z[i];
            zh += z[i] * g.z[i];
            ee += (g.z[i] - z[i]) * (g.z[i] - z[i]);
        }
        rep.mean_cg_iters += g.regression.iterations;
        if (zz == 0.0) continue;
        const double rel = std::sqrt(ee / zz);
        rep.mean_rel_err += rel;
        rep.max_rel_err = std::max(rep.max_rel_err, rel);
        rep.mean_cos += hh > 0.0 ? zh / std::sqrt(zz * hh) : 0.0;
        ++counted;
    }
    rep.mean_cg_iters /= static_cast<double>(M);
    if (counted) {
        rep.mean_rel_err /= static_cast<double>(counted);
        rep.mean_cos /= static_cast<double>(counted);
    }
    return rep;
}

}  // namespace fbllr
