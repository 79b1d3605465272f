#include "fbllr/problem.hpp"

#include <cmath>

#include "fbllr/error.hpp"

namespace fbllr {

ProblemParams& ProblemParams::set(const std::string& key, double value) {
    values_[key] = Vec{value};
    return *this;
}

ProblemParams& ProblemParams::set(const std::string& key, Vec value) {
    if (value.empty()) throw InvalidArgument("parameter '" + key + "' must not be empty");
    values_[key] = std::move(value);
    return *this;
}

double ProblemParams::scalar(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second.size() != 1) throw InvalidArgument("parameter '" + key + "' must be a scalar");
    return it->second.front();
}

Vec ProblemParams::vector(const std::string& key, std::size_t d, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return Vec(d, fallback);
    if (it->second.size() == 1) return Vec(d, it->second.front());
    if (it->second.size() != d) {
        throw InvalidArgument("parameter '" + key + "' has length " + std::to_string(it->second.size()) +
                              ", expected 1 or " + std::to_string(d));
    }
    return it->second;
}

void ProblemSpec::validate() const {
    if (dimension < 1) throw InvalidArgument("dimension must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon T must be > 0");
    if (query_point.size() != dimension) throw InvalidArgument("query point has wrong dimension");
    const std::size_t fixed = diffusion.fixed_dimension();
    if (fixed != 0 && fixed != dimension) throw InvalidArgument("diffusion dimension does not match d");
    if (!driver) throw InvalidArgument("problem '" + name + "' has no driver");
    if (!terminal) throw InvalidArgument("problem '" + name + "' has no terminal condition");
    if (exact) {
        if (!exact->u || !exact->grad_u) throw InvalidArgument("exact solution needs u and grad_u");
        // Deterministic probe points: query point and two shifted copies.
        for (double shift : {0.0, 0.25, -0.5}) {
            Vec x = query_point;
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += shift * (i % 2 == 0 ? 1.0 : -1.0);
            const double g = terminal(x);
            const double u = exact->u(horizon, x);
            if (std::abs(g - u) > 1e-10) {
                throw InvalidArgument("terminal condition of '" + name + "' disagrees with exact u(T, .)");
            }
        }
    }
}

double apply_generator(const ExactSolution& exact, const DiffusionSpec& diffusion, const DriftFn& drift,
                       double t, std::span<const double> x) {
    const std::size_t d = x.size();
    double lu = 0.0;
    if (diffusion.is_isotropic()) {
        if (!exact.laplacian) throw InvalidArgument("generator needs the exact Laplacian");
        const double c = diffusion.isotropic_coefficient();
        lu = 0.5 * c * c * exact.laplacian(t, x);
    } else if (const auto* diag = std::get_if<Diagonal>(&diffusion.form())) {
        if (!exact.hessian_diag) throw InvalidArgument("generator needs the exact Hessian diagonal");
        Vec h(d);
        exact.hessian_diag(t, x, h);
        for (std::size_t i = 0; i < d; ++i) lu += 0.5 * diag->v[i] * diag->v[i] * h[i];
    } else {
        throw InvalidArgument("manufactured sources are not supported for dense diffusion");
    }
    if (drift) {
        Vec mu(d), g(d);
        drift(t, x, mu);
        exact.grad_u(t, x, g);
        for (std::size_t i = 0; i < d; ++i) lu += mu[i] * g[i];
    }
    return lu;
}

ScalarFieldFn manufactured_source(const ExactSolution& exact, const DiffusionSpec& diffusion,
                                  const DriftFn& drift, GradNonlinearityFn nonlinearity) {
    if (!exact.u || !exact.grad_u || !exact.dt_u) {
        throw InvalidArgument("manufactured source needs u, grad_u and dt_u");
    }
    return [exact, diffusion, drift, nonlinearity = std::move(nonlinearity)](double t,
                                                                             std::span<const double> x) {
        const double u = exact.u(t, x);
        Vec g(x.size());
        exact.grad_u(t, x, g);
        const double lu = apply_generator(exact, diffusion, drift, t, x);
        const double nl = nonlinearity ? nonlinearity(t, x, u, g) : 0.0;
        return -(exact.dt_u(t, x) + lu) - nl;
    };
}

}  // namespace fbllr
