#include "fbllr/regress.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbllr/error.hpp"

namespace fbllr {
namespace {

void center(std::size_t m, std::span<const double> positions, std::size_t d, std::span<double> D,
            std::span<double> sq_dist) {
    const std::size_t M = positions.size() / d;
    const double* anchor = positions.data() + m * d;
    for (std::size_t j = 0; j < M; ++j) {
        const double* xj = positions.data() + j * d;
        double* dj = D.data() + j * d;
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double v = xj[i] - anchor[i];
            dj[i] = v;
            s += v * v;
        }
        sq_dist[j] = s;
    }
}

// Weights from squared distances; throws when the raw kernel mass vanishes.
void weights_from_sq_dist(std::size_t m, std::span<const double> sq_dist, double eps, const KernelSpec& kernel,
                          std::span<double> w) {
    double total = 0.0;
    for (std::size_t j = 0; j < sq_dist.size(); ++j) {
        w[j] = kernel(std::sqrt(sq_dist[j]) / eps);
        total += w[j];
    }
    if (!(total > 0.0) || !std::isfinite(total)) throw DegenerateNeighborhood(m);
    for (double& v : w) v /= total;
}

double bandwidth_from_sq_dist(std::size_t m, std::span<const double> sq_dist, const BandwidthRule& rule, double dt) {
    double eps = 0.0;
    switch (rule.kind) {
        case BandwidthKind::MaxDistance:
            eps = std::sqrt(*std::max_element(sq_dist.begin(), sq_dist.end()));
            if (!(eps > 0.0)) throw DegenerateNeighborhood(m, "all particles coincide");
            break;
        case BandwidthKind::ScaledSqrtDt:
            eps = rule.value * std::sqrt(dt);
            break;
        case BandwidthKind::Fixed:
            eps = rule.value;
            break;
    }
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("bandwidth must be > 0");
    return eps;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

RegressionOutput cg_solve(std::span<const double> D, std::size_t d, std::span<const double> Y,
                          std::span<const double> w, double lambda, double cg_tol, int cg_maxiter,
                          RegressionWorkspace& ws) {
    const std::size_t M = w.size();
    const std::size_t n = d + 1;
    for (std::size_t j = 0; j < M; ++j) {
        if (!std::isfinite(Y[j])) throw InvalidArgument("non-finite response at particle " + std::to_string(j));
    }
    ws.x.assign(n, 0.0);
    ws.r.assign(n, 0.0);
    ws.p.resize(n);
    ws.ap.resize(n);
    // b = D^T W Y
    for (std::size_t j = 0; j < M; ++j) {
        const double wy = w[j] * Y[j];
        if (wy == 0.0) continue;
        ws.r[0] += wy;
        const double* dj = D.data() + j * d;
        double* rx = ws.r.data() + 1;
        for (std::size_t i = 0; i < d; ++i) rx[i] += wy * dj[i];
    }
    RegressionOutput out;
    out.lambda = lambda;
    double rr = dot(ws.r, ws.r);
    const double b_norm = std::sqrt(rr);
    out.initial_residual_norm = b_norm;
    out.residual_norm = b_norm;
    const double target = cg_tol * b_norm;
    if (b_norm == 0.0) {
        out.alpha_x.assign(d, 0.0);
        return out;
    }
    ws.best = ws.x;
    double best_norm = b_norm;
    std::copy(ws.r.begin(), ws.r.end(), ws.p.begin());
    out.converged = false;
    for (int it = 1; it <= cg_maxiter; ++it) {
        normal_operator_apply(D, d, w, lambda, ws.p, ws.ap);
        const double pap = dot(ws.p, ws.ap);
        if (!(pap > 0.0)) break;  // operator not positive definite on p
        const double step = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            ws.x[i] += step * ws.p[i];
            ws.r[i] -= step * ws.ap[i];
        }
        const double rr_new = dot(ws.r, ws.r);
        out.iterations = it;
        const double r_norm = std::sqrt(rr_new);
        if (r_norm < best_norm) {
            best_norm = r_norm;
            ws.best = ws.x;
        }
        if (r_norm <= target) {
            out.converged = true;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) ws.p[i] = ws.r[i] + beta * ws.p[i];
    }
    out.residual_norm = best_norm;
    out.alpha = ws.best[0];
    out.alpha_x.assign(ws.best.begin() + 1, ws.best.end());
    double s = 0.0, s2 = 0.0;
    for (double v : w) {
        s += v;
        s2 += v * v;
    }
    out.effective_weight_count = s2 > 0.0 ? s * s / s2 : 0.0;
    return out;
}

}  // namespace

Vec compute_weights(std::size_t m, std::span<const double> positions, std::size_t d, double eps,
                    const KernelSpec& kernel) {
    const std::size_t M = positions.size() / d;
    if (M < 2) throw InvalidArgument("compute_weights needs M >= 2");
    if (!(eps > 0.0)) throw InvalidArgument("bandwidth must be > 0");
    Vec D(M * d), sq(M), w(M);
    center(m, positions, d, D, sq);
    weights_from_sq_dist(m, sq, eps, kernel, w);
    return w;
}

double bandwidth(std::size_t m, std::span<const double> positions, std::size_t d, const BandwidthRule& rule,
                 double dt) {
    const std::size_t M = positions.size() / d;
    if (M < 2) throw InvalidArgument("bandwidth needs M >= 2");
    Vec D(M * d), sq(M);
    center(m, positions, d, D, sq);
    return bandwidth_from_sq_dist(m, sq, rule, dt);
}

void normal_operator_apply(std::span<const double> D, std::size_t d, std::span<const double> weights, double lambda,
                           std::span<const double> v, std::span<double> out) {
    const std::size_t M = weights.size();
    const double v0 = v[0];
    const double* vx = v.data() + 1;
    double* ox = out.data() + 1;
    out[0] = lambda * v0;
    for (std::size_t i = 0; i < d; ++i) ox[i] = lambda * vx[i];
    for (std::size_t j = 0; j < M; ++j) {
        const double wj = weights[j];
        if (wj == 0.0) continue;
        const double* dj = D.data() + j * d;
        // Step 1: beta_j = w_j (v0 + D_j . v_x)
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += dj[i] * vx[i];
        const double beta = wj * (v0 + s);
        // Step 2: accumulate D^T beta
        out[0] += beta;
        for (std::size_t i = 0; i < d; ++i) ox[i] += beta * dj[i];
    }
}

double auto_ridge_lambda(std::span<const double> D, std::size_t d, std::span<const double> weights) {
    double s = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        const double* dj = D.data() + j * d;
        double n2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) n2 += dj[i] * dj[i];
        s += weights[j] * n2;
    }
    return 1e-8 * s / static_cast<double>(d);
}

RegressionOutput solve_wls_centered(std::span<const double> D, std::size_t d, std::span<const double> responses,
                                    std::span<const double> weights, double lambda, double cg_tol, int cg_maxiter) {
    if (weights.size() < 2) throw InvalidArgument("solve_wls needs M >= 2");
    if (responses.size() != weights.size() || D.size() != weights.size() * d) {
        throw InvalidArgument("solve_wls: inconsistent sizes");
    }
    if (!(lambda >= 0.0)) throw InvalidArgument("ridge lambda must be >= 0");
    RegressionWorkspace ws;
    return cg_solve(D, d, responses, weights, lambda, cg_tol, cg_maxiter, ws);
}

RegressionOutput solve_wls(std::size_t m, std::span<const double> positions, std::size_t d,
                           std::span<const double> responses, std::span<const double> weights, double lambda,
                           double cg_tol, int cg_maxiter) {
    const std::size_t M = positions.size() / d;
    Vec D(M * d), sq(M);
    center(m, positions, d, D, sq);
    return solve_wls_centered(D, d, responses, weights, lambda, cg_tol, cg_maxiter);
}

void RegressionWorkspace::reserve(std::size_t M, std::size_t d) {
    centered.resize(M * d);
    sq_dist.resize(M);
    weights.resize(M);
    x.reserve(d + 1);
    r.reserve(d + 1);
    p.reserve(d + 1);
    ap.reserve(d + 1);
    best.reserve(d + 1);
}

GradientEstimate estimate_gradient(std::size_t m, const LevelState& level, std::span<const double> responses,
                                   const ProblemSpec& problem, const SolverConfig& config, double dt,
                                   RegressionWorkspace& ws) {
    const std::size_t M = level.M;
    const std::size_t d = level.d;
    ws.reserve(M, d);
    GradientEstimate est;
    try {
        center(m, level.positions, d, ws.centered, ws.sq_dist);
        const bool coincident =
            std::all_of(ws.sq_dist.begin(), ws.sq_dist.end(), [](double s) { return s == 0.0; });
        if (coincident) {
            // No spatial spread (e.g. level 0): only the intercept is identifiable.
            double mean = 0.0;
            for (double y : responses) mean += y;
            est.regression.alpha = mean / static_cast<double>(M);
            est.regression.alpha_x.assign(d, 0.0);
            est.regression.degenerate = true;
            est.regression.effective_weight_count = static_cast<double>(M);
            est.z.assign(d, 0.0);
            return est;
        }
        const double eps = bandwidth_from_sq_dist(m, ws.sq_dist, config.bandwidth, dt);
        weights_from_sq_dist(m, ws.sq_dist, eps, config.kernel, ws.weights);
        const double lambda = config.ridge_lambda.value_or(auto_ridge_lambda(ws.centered, d, ws.weights));
        est.regression = cg_solve(ws.centered, d, responses, ws.weights, lambda, config.cg_tol,
                                  config.effective_cg_maxiter(d), ws);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument("gradient estimate at anchor " + std::to_string(m) + ": " + e.what());
    }
    est.z.resize(d);
    problem.diffusion.apply_transpose(est.regression.alpha_x, est.z);
    return est;
}

GradientEstimate estimate_gradient(std::size_t m, const LevelState& level, std::span<const double> responses,
                                   const ProblemSpec& problem, const SolverConfig& config, double dt) {
    RegressionWorkspace ws;
    return estimate_gradient(m, level, responses, problem, config, dt, ws);
}

}  // namespace fbllr
