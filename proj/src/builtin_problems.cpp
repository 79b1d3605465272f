#include <algorithm>
#include <cmath>
#include <numeric>

#include "fbllr/error.hpp"
#include "fbllr/problem.hpp"

namespace fbllr {
namespace {

double squared_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double sum(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); }

// |1 - u| below this is clamped in the logarithmic potential.
constexpr double kGuard = 1e-12;

double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }

void check_keys(const std::string& name, const ProblemParams& params) {
    const auto allowed = builtin_problem_keys(name);
    for (const auto& [key, value] : params.values()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw InvalidArgument("parameter '" + key + "' is not accepted by problem '" + name + "'");
        }
        for (double v : value) {
            if (!std::isfinite(v)) throw InvalidArgument("parameter '" + key + "' is not finite");
        }
    }
}

double positive(const ProblemParams& params, const std::string& key, double fallback) {
    const double v = params.scalar(key, fallback);
    if (!(v > 0.0)) throw InvalidArgument("parameter '" + key + "' must be > 0");
    return v;
}

ProblemSpec base(const std::string& name, std::size_t d, const ProblemParams& params, double default_T) {
    if (d < 1) throw InvalidArgument("dimension must be >= 1");
    ProblemSpec p;
    p.name = name;
    p.dimension = d;
    p.horizon = positive(params, "T", default_T);
    p.query_point = params.vector("x0", d, 0.0);
    return p;
}

// Allen-Cahn with double-well reaction f(u) = u - u^3 and Lu = Laplacian.
ProblemSpec allen_cahn_dw(std::size_t d, const ProblemParams& params) {
    ProblemSpec p = base("allen_cahn_dw", d, params, 0.3);
    p.diffusion = Isotropic{std::sqrt(2.0)};
    p.driver = [](double, std::span<const double>, double y, std::span<const double>) { return y - y * y * y; };
    p.driver_dy = [](double, std::span<const double>, double y, std::span<const double>) {
        return 1.0 - 3.0 * y * y;
    };
    p.terminal = [](std::span<const double> x) { return 1.0 / (2.0 + 0.4 * squared_norm(x)); };
    p.driver_uses_z = false;
    const bool at_origin = std::all_of(p.query_point.begin(), p.query_point.end(), [](double v) { return v == 0.0; });
    if (d == 100 && p.horizon == 0.3 && at_origin) p.cited_reference = 0.0528;
    return p;
}

// Exact solution cos(prod x) exp(cos t - |x|^2) and its derivatives.
// Partial products prod_{j != i} x_j are formed with prefix/suffix sweeps so
// zeros in x are handled without division.
ExactSolution cosine_gaussian_exact() {
    struct Pieces {
        double p;        // prod x_j
        double e;        // exp(cos t - |x|^2)
        double r2;
        Vec partial;     // prod_{j != i} x_j
    };
    auto pieces = [](double t, std::span<const double> x, bool need_partial) {
        Pieces q;
        q.r2 = squared_norm(x);
        q.p = 1.0;
        for (double v : x) q.p *= v;
        q.e = std::exp(std::cos(t) - q.r2);
        if (need_partial) {
            const std::size_t d = x.size();
            q.partial.assign(d, 1.0);
            double prefix = 1.0;
            for (std::size_t i = 0; i < d; ++i) {
                q.partial[i] = prefix;
                prefix *= x[i];
            }
            double suffix = 1.0;
            for (std::size_t i = d; i-- > 0;) {
                q.partial[i] *= suffix;
                suffix *= x[i];
            }
        }
        return q;
    };
    ExactSolution ex;
    ex.u = [pieces](double t, std::span<const double> x) {
        const auto q = pieces(t, x, false);
        return std::cos(q.p) * q.e;
    };
    ex.dt_u = [pieces](double t, std::span<const double> x) {
        const auto q = pieces(t, x, false);
        return -std::sin(t) * std::cos(q.p) * q.e;
    };
    ex.grad_u = [pieces](double t, std::span<const double> x, std::span<double> g) {
        const auto q = pieces(t, x, true);
        const double s = std::sin(q.p), c = std::cos(q.p);
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = q.e * (-s * q.partial[i] - 2.0 * x[i] * c);
    };
    ex.laplacian = [pieces](double t, std::span<const double> x) {
        const auto q = pieces(t, x, true);
        const double s = std::sin(q.p), c = std::cos(q.p);
        const double d = static_cast<double>(x.size());
        double sum_partial2 = 0.0;
        for (double v : q.partial) sum_partial2 += v * v;
        return q.e * (4.0 * d * q.p * s + 4.0 * q.r2 * c - c * sum_partial2 - 2.0 * d * c);
    };
    return ex;
}

// Allen-Cahn with logarithmic potential and a manufactured source.
ProblemSpec allen_cahn_log(std::size_t d, const ProblemParams& params) {
    ProblemSpec p = base("allen_cahn_log", d, params, 1.0);
    const double theta = positive(params, "theta", 1.0);
    const double theta_c = positive(params, "theta_c", 2.0);
    if (!(theta < theta_c)) throw InvalidArgument("allen_cahn_log requires theta < theta_c");
    p.diffusion = Isotropic{std::sqrt(2.0)};
    p.exact = cosine_gaussian_exact();

    auto counters = p.counters;
    auto log_potential = [theta, theta_c, counters](double y) {
        double den = std::abs(1.0 - y);
        if (den < kGuard) {
            counters->log_clamps.fetch_add(1, std::memory_order_relaxed);
            den = kGuard;
        }
        double num = std::max(std::abs(1.0 + y), kGuard);
        return 0.5 * theta * std::log(num / den) - theta_c * y;
    };
    auto source = manufactured_source(
        *p.exact, p.diffusion, {},
        [log_potential](double, std::span<const double>, double u, std::span<const double>) {
            return log_potential(u);
        });
    p.driver = [source, log_potential](double t, std::span<const double> x, double y, std::span<const double>) {
        return log_potential(y) + source(t, x);
    };
    p.driver_dy = [theta, theta_c](double, std::span<const double>, double y, std::span<const double>) {
        const double den = std::max(std::abs(1.0 - y * y), 1e-24);
        return std::copysign(theta / den, 1.0 - y * y) - theta_c;
    };
    p.terminal = [exact_u = p.exact->u, T = p.horizon](std::span<const double> x) { return exact_u(T, x); };
    p.driver_uses_z = false;
    return p;
}

// Viscous Burgers-type equation
//   u_t + (d^2 nu / 2) Lap u + d nu (u - 1/(d nu) - 1/2) sum_i u_{x_i} = 0
// whose solution is the logistic function of t + sum(x)/d for every nu > 0.
ProblemSpec burgers(std::size_t d, const ProblemParams& params) {
    ProblemSpec p = base("burgers", d, params, 0.3);
    const double dd = static_cast<double>(d);
    const double nu = positive(params, "nu", 1.0 / dd);
    const double sqrt_nu = std::sqrt(nu);
    const double shift = 1.0 / (dd * nu) + 0.5;
    p.diffusion = Isotropic{dd * sqrt_nu};
    // sum_i u_{x_i} = 1^T z / (d sqrt(nu)) under sigma = d sqrt(nu) I.
    p.driver = [sqrt_nu, shift](double, std::span<const double>, double y, std::span<const double> z) {
        return sqrt_nu * (y - shift) * sum(z);
    };
    p.driver_dy = [sqrt_nu](double, std::span<const double>, double, std::span<const double> z) {
        return sqrt_nu * sum(z);
    };
    const double T = p.horizon;
    p.terminal = [T, dd](std::span<const double> x) { return logistic(T + sum(x) / dd); };

    ExactSolution ex;
    ex.u = [dd](double t, std::span<const double> x) { return logistic(t + sum(x) / dd); };
    ex.grad_u = [dd](double t, std::span<const double> x, std::span<double> g) {
        const double s = logistic(t + sum(x) / dd);
        std::fill(g.begin(), g.end(), s * (1.0 - s) / dd);
    };
    ex.dt_u = [dd](double t, std::span<const double> x) {
        const double s = logistic(t + sum(x) / dd);
        return s * (1.0 - s);
    };
    ex.laplacian = [dd](double t, std::span<const double> x) {
        const double s = logistic(t + sum(x) / dd);
        return s * (1.0 - s) * (1.0 - 2.0 * s) / dd;
    };
    p.exact = std::move(ex);
    return p;
}

// Hamilton-Jacobi type equation with gradient-dependent sink kappa u |grad u|^2,
// Laplacian generator and exact solution (1+4t)^{-d/2} exp(-|x|^2/(1+4t)).
ProblemSpec hj_gradient_sink(std::size_t d, const ProblemParams& params) {
    ProblemSpec p = base("hj_gradient_sink", d, params, 0.5);
    const double kappa = params.scalar("kappa", 0.1);
    if (!(kappa >= 0.0)) throw InvalidArgument("parameter 'kappa' must be >= 0");
    const double c = std::sqrt(2.0);
    p.diffusion = Isotropic{c};
    const double dd = static_cast<double>(d);

    ExactSolution ex;
    ex.u = [dd](double t, std::span<const double> x) {
        const double w = 1.0 + 4.0 * t;
        return std::exp(-0.5 * dd * std::log(w) - squared_norm(x) / w);
    };
    ex.grad_u = [dd](double t, std::span<const double> x, std::span<double> g) {
        const double w = 1.0 + 4.0 * t;
        const double u = std::exp(-0.5 * dd * std::log(w) - squared_norm(x) / w);
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = -2.0 * x[i] / w * u;
    };
    ex.dt_u = [dd](double t, std::span<const double> x) {
        const double w = 1.0 + 4.0 * t;
        const double r2 = squared_norm(x);
        const double u = std::exp(-0.5 * dd * std::log(w) - r2 / w);
        return u * (-2.0 * dd / w + 4.0 * r2 / (w * w));
    };
    ex.laplacian = [dd](double t, std::span<const double> x) {
        const double w = 1.0 + 4.0 * t;
        const double r2 = squared_norm(x);
        const double u = std::exp(-0.5 * dd * std::log(w) - r2 / w);
        return u * (4.0 * r2 / (w * w) - 2.0 * dd / w);
    };
    p.exact = ex;

    auto source = manufactured_source(
        ex, p.diffusion, {},
        [kappa](double, std::span<const double>, double u, std::span<const double> g) {
            return -kappa * u * squared_norm(g);
        });
    // |grad u|^2 = |z|^2 / c^2 for sigma = c I.
    const double inv_c2 = 1.0 / (c * c);
    p.driver = [source, kappa, inv_c2](double t, std::span<const double> x, double y, std::span<const double> z) {
        return source(t, x) - kappa * y * squared_norm(z) * inv_c2;
    };
    p.driver_dy = [kappa, inv_c2](double, std::span<const double>, double, std::span<const double> z) {
        return -kappa * squared_norm(z) * inv_c2;
    };
    p.terminal = [u = ex.u, T = p.horizon](std::span<const double> x) { return u(T, x); };
    return p;
}

// Heat equation, f = 0, Gaussian terminal exp(-beta |x|^2).
ProblemSpec linear_heat(std::size_t d, const ProblemParams& params) {
    ProblemSpec p = base("linear_heat", d, params, 1.0);
    const double sigma = positive(params, "sigma", 1.0);
    const double beta = positive(params, "beta", 1.0);
    const double dd = static_cast<double>(d);
    const double T = p.horizon;
    p.diffusion = Isotropic{sigma};
    p.driver = [](double, std::span<const double>, double, std::span<const double>) { return 0.0; };
    p.driver_dy = [](double, std::span<const double>, double, std::span<const double>) { return 0.0; };
    p.terminal = [beta](std::span<const double> x) { return std::exp(-beta * squared_norm(x)); };
    p.driver_uses_z = false;

    auto spread = [=](double t) { return 1.0 + 2.0 * beta * sigma * sigma * (T - t); };
    ExactSolution ex;
    ex.u = [=](double t, std::span<const double> x) {
        const double q = spread(t);
        return std::exp(-0.5 * dd * std::log(q) - beta * squared_norm(x) / q);
    };
    ex.grad_u = [=](double t, std::span<const double> x, std::span<double> g) {
        const double q = spread(t);
        const double u = std::exp(-0.5 * dd * std::log(q) - beta * squared_norm(x) / q);
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = -2.0 * beta * x[i] / q * u;
    };
    ex.dt_u = [=](double t, std::span<const double> x) {
        const double q = spread(t);
        const double r2 = squared_norm(x);
        const double u = std::exp(-0.5 * dd * std::log(q) - beta * r2 / q);
        const double s2 = sigma * sigma;
        return u * (dd * beta * s2 / q - 2.0 * beta * beta * s2 * r2 / (q * q));
    };
    ex.laplacian = [=](double t, std::span<const double> x) {
        const double q = spread(t);
        const double r2 = squared_norm(x);
        const double u = std::exp(-0.5 * dd * std::log(q) - beta * r2 / q);
        return u * (4.0 * beta * beta * r2 / (q * q) - 2.0 * beta * dd / q);
    };
    p.exact = std::move(ex);
    return p;
}

// f = 0, affine terminal a.x + b; u(t, x) = a.x + b for driftless diffusion.
ProblemSpec affine_test(std::size_t d, const ProblemParams& params) {
    ProblemSpec p = base("affine_test", d, params, 1.0);
    const Vec a = params.vector("a", d, 1.0);
    const double b = params.scalar("b", 0.0);
    p.diffusion = Isotropic{positive(params, "sigma", 1.0)};
    p.driver = [](double, std::span<const double>, double, std::span<const double>) { return 0.0; };
    p.driver_dy = [](double, std::span<const double>, double, std::span<const double>) { return 0.0; };
    auto affine = [a, b](std::span<const double> x) {
        double s = b;
        for (std::size_t i = 0; i < x.size(); ++i) s += a[i] * x[i];
        return s;
    };
    p.terminal = affine;
    p.driver_uses_z = false;
    ExactSolution ex;
    ex.u = [affine](double, std::span<const double> x) { return affine(x); };
    ex.grad_u = [a](double, std::span<const double>, std::span<double> g) { std::copy(a.begin(), a.end(), g.begin()); };
    ex.dt_u = [](double, std::span<const double>) { return 0.0; };
    ex.laplacian = [](double, std::span<const double>) { return 0.0; };
    ex.hessian_diag = [](double, std::span<const double>, std::span<double> h) { std::fill(h.begin(), h.end(), 0.0); };
    p.exact = std::move(ex);
    return p;
}

}  // namespace

const std::vector<std::string>& builtin_problem_names() {
    static const std::vector<std::string> names = {"allen_cahn_dw", "allen_cahn_log", "burgers",
                                                   "hj_gradient_sink", "linear_heat", "affine_test"};
    return names;
}

std::vector<std::string> builtin_problem_keys(const std::string& name) {
    std::vector<std::string> keys = {"T", "x0"};
    if (name == "allen_cahn_log") keys.insert(keys.end(), {"theta", "theta_c"});
    else if (name == "burgers") keys.push_back("nu");
    else if (name == "hj_gradient_sink") keys.push_back("kappa");
    else if (name == "linear_heat") keys.insert(keys.end(), {"sigma", "beta"});
    else if (name == "affine_test") keys.insert(keys.end(), {"a", "b", "sigma"});
    return keys;
}

ProblemSpec builtin_problem(const std::string& name, std::size_t d, const ProblemParams& params) {
    const auto& names = builtin_problem_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw NotFound("unknown problem '" + name + "'");
    }
    check_keys(name, params);
    ProblemSpec p;
    if (name == "allen_cahn_dw") p = allen_cahn_dw(d, params);
    else if (name == "allen_cahn_log") p = allen_cahn_log(d, params);
    else if (name == "burgers") p = burgers(d, params);
    else if (name == "hj_gradient_sink") p = hj_gradient_sink(d, params);
    else if (name == "linear_heat") p = linear_heat(d, params);
    else p = affine_test(d, params);
    p.validate();
    return p;
}

}  // namespace fbllr
