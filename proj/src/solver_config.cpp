#include "fbllr/solver_config.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "fbllr/error.hpp"

namespace fbllr {

double KernelSpec::operator()(double r) const noexcept {
    switch (kind) {
        case KernelKind::Gaussian:
            return std::exp(-r * r);
        case KernelKind::Epanechnikov:
            return std::max(0.0, 1.0 - r * r);
    }
    return 0.0;
}

int SolverConfig::effective_cg_maxiter(std::size_t d) const {
    if (cg_maxiter) return *cg_maxiter;
    return static_cast<int>(std::min<std::size_t>(10 * (d + 1), 2000));
}

std::size_t SolverConfig::effective_workers() const {
    if (workers > 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

void SolverConfig::validate(std::size_t d) const {
    if (N < 1) throw ConfigError("N must be >= 1");
    if (M < 2) throw ConfigError("M must be >= 2");
    if (ridge_lambda) {
        if (!(*ridge_lambda >= 0.0)) throw ConfigError("ridge_lambda must be >= 0");
        if (*ridge_lambda == 0.0 && M <= d + 1) throw ConfigError("ridge required when M <= d+1");
    }
    if (!(cg_tol > 0.0)) throw ConfigError("cg_tol must be > 0");
    if (cg_maxiter && *cg_maxiter < 1) throw ConfigError("cg_maxiter must be >= 1");
    if (!(newton.tol > 0.0)) throw ConfigError("newton_tol must be > 0");
    if (newton.maxiter < 1) throw ConfigError("newton_maxiter must be >= 1");
    if (!(newton.fd_step_base > 0.0)) throw ConfigError("newton fd step must be > 0");
    if (bandwidth.kind != BandwidthKind::MaxDistance && !(bandwidth.value > 0.0)) {
        throw ConfigError("bandwidth constant must be > 0");
    }
    if (checkpoint_stride && *checkpoint_stride < 1) throw ConfigError("checkpoint_stride must be >= 1");
}

}  // namespace fbllr
