#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fbllr/diffusion.hpp"
#include "fbllr/paths.hpp"
#include "fbllr/problem.hpp"
#include "fbllr/solver_config.hpp"

namespace fbllr {

/// Result of one anchor's weighted local linear fit
///   min_a  sum_j w_j (Y_j - a_0 - a_x . D_j)^2 + lambda |a|^2.
struct RegressionOutput {
    double alpha = 0.0;  // intercept, u + u_t dt at the anchor
    Vec alpha_x;         // gradient estimate
    int iterations = 0;
    double residual_norm = 0.0;
    double initial_residual_norm = 0.0;
    bool converged = true;
    double effective_weight_count = 0.0;  // Kish: (sum w)^2 / sum w^2
    double lambda = 0.0;
    /// All particles coincide with the anchor; gradient set to zero.
    bool degenerate = false;
};

/// Normalised kernel weights around particle m of an M x d row-major cloud.
/// Throws DegenerateNeighborhood when the raw kernel sum is not positive.
Vec compute_weights(std::size_t m, std::span<const double> positions, std::size_t d, double eps,
                    const KernelSpec& kernel);

/// eps_k for anchor m. Throws DegenerateNeighborhood when MaxDistance finds
/// all particles coincident, InvalidArgument for a nonpositive result.
double bandwidth(std::size_t m, std::span<const double> positions, std::size_t d, const BandwidthRule& rule,
                 double dt);

/// out = (D^T W D + lambda I) v for the implicit design matrix with rows
/// (1, D_j^T). D is M x d row-major (centred positions); v, out have d + 1
/// entries. Cost O(M d); the (d+1)^2 matrix is never formed.
void normal_operator_apply(std::span<const double> D, std::size_t d, std::span<const double> weights, double lambda,
                           std::span<const double> v, std::span<double> out);

/// Default ridge weight 1e-8 * sum_j w_j |D_j|^2 / d.
double auto_ridge_lambda(std::span<const double> D, std::size_t d, std::span<const double> weights);

/// Conjugate gradients on the ridge normal equations with centred D.
/// Throws InvalidArgument on non-finite responses.
RegressionOutput solve_wls_centered(std::span<const double> D, std::size_t d, std::span<const double> responses,
                                    std::span<const double> weights, double lambda, double cg_tol, int cg_maxiter);

/// As above, centring the positions at particle m first.
RegressionOutput solve_wls(std::size_t m, std::span<const double> positions, std::size_t d,
                           std::span<const double> responses, std::span<const double> weights, double lambda,
                           double cg_tol, int cg_maxiter);

struct GradientEstimate {
    Vec z;  // sigma^T grad u at the anchor
    RegressionOutput regression;
};

/// Reusable buffers for estimate_gradient; one per worker thread.
class RegressionWorkspace {
public:
    void reserve(std::size_t M, std::size_t d);

    Vec centered;  // M x d
    Vec sq_dist;   // M
    Vec weights;   // M
    Vec x, r, p, ap, best;  // d + 1
};

/// bandwidth -> weights -> ridge fit -> z = sigma^T alpha_x at the anchor.
/// Errors are rethrown with the anchor index attached.
GradientEstimate estimate_gradient(std::size_t m, const LevelState& level, std::span<const double> responses,
                                   const ProblemSpec& problem, const SolverConfig& config, double dt,
                                   RegressionWorkspace& workspace);

GradientEstimate estimate_gradient(std::size_t m, const LevelState& level, std::span<const double> responses,
                                   const ProblemSpec& problem, const SolverConfig& config, double dt);

}  // namespace fbllr
