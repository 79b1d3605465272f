#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fbllr/error.hpp"
#include "fbllr/regress.hpp"
#include "test_util.hpp"

using namespace fbllr;
using fbllr::testing::random_vec;

namespace {

// Explicit (d+1) x (d+1) normal matrix with design rows (1, D_j).
Eigen::MatrixXd dense_normal(const Vec& D, std::size_t d, const Vec& w, double lambda) {
    const std::size_t M = w.size();
    Eigen::MatrixXd X(M, d + 1);
    for (std::size_t j = 0; j < M; ++j) {
        X(j, 0) = 1.0;
        for (std::size_t i = 0; i < d; ++i) X(j, i + 1) = D[j * d + i];
    }
    const Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), M);
    return X.transpose() * wv.asDiagonal() * X + lambda * Eigen::MatrixXd::Identity(d + 1, d + 1);
}

Eigen::VectorXd dense_rhs(const Vec& D, std::size_t d, const Vec& w, const Vec& Y) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d + 1);
    for (std::size_t j = 0; j < w.size(); ++j) {
        b(0) += w[j] * Y[j];
        for (std::size_t i = 0; i < d; ++i) b(i + 1) += w[j] * Y[j] * D[j * d + i];
    }
    return b;
}

Eigen::VectorXd dense_solve(const Vec& D, std::size_t d, const Vec& w, const Vec& Y, double lambda) {
    return dense_normal(D, d, w, lambda).llt().solve(dense_rhs(D, d, w, Y));
}

Vec centered(const Vec& positions, std::size_t d, std::size_t m) {
    Vec D(positions.size());
    for (std::size_t j = 0; j < positions.size() / d; ++j) {
        for (std::size_t i = 0; i < d; ++i) D[j * d + i] = positions[j * d + i] - positions[m * d + i];
    }
    return D;
}

Vec gaussian_weights(const Vec& positions, std::size_t d, std::size_t m) {
    const double eps = bandwidth(m, positions, d, BandwidthRule::max_distance(), 0.0);
    return compute_weights(m, positions, d, eps, KernelSpec{});
}

double norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

LevelState make_level(const Vec& positions, std::size_t d) {
    LevelState l;
    l.d = d;
    l.M = positions.size() / d;
    l.positions = positions;
    return l;
}

}  // namespace

TEST(Weights, GaussianExample) {
    const Vec positions = {0.0, 1.0, 2.0};
    const Vec w = compute_weights(0, positions, 1, 1.0, KernelSpec{KernelKind::Gaussian});
    const double e1 = std::exp(-1.0), e4 = std::exp(-4.0);
    const double s = 1.0 + e1 + e4;
    EXPECT_NEAR(w[0], 1.0 / s, 1e-15);
    EXPECT_NEAR(w[1], e1 / s, 1e-15);
    EXPECT_NEAR(w[2], e4 / s, 1e-15);
    EXPECT_NEAR(w[0], 0.72140, 5e-5);
    EXPECT_NEAR(w[1], 0.26539, 5e-5);
    EXPECT_NEAR(w[2], 0.013213, 5e-6);
    EXPECT_NEAR(w[0] / w[1], std::exp(1.0), 1e-13);
}

TEST(Weights, CoincidentParticlesAreUniform) {
    const Vec positions(5 * 2, 0.25);
    const Vec w = compute_weights(2, positions, 2, 1.0, KernelSpec{});
    for (double v : w) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(Weights, EquidistantNeighboursShareWeight) {
    const Vec positions = {0, 0, 1, 0, 0, 1, -1, 0, 0, -1};
    const Vec w = compute_weights(0, positions, 2, 1.0, KernelSpec{});
    for (std::size_t j = 2; j < 5; ++j) EXPECT_EQ(w[j], w[1]);
}

TEST(Weights, EpanechnikovCompactSupport) {
    const Vec positions = {0.0, 0.5, 1.5};
    const Vec w = compute_weights(0, positions, 1, 1.0, KernelSpec{KernelKind::Epanechnikov});
    EXPECT_EQ(w[2], 0.0);
    EXPECT_GT(w[1], 0.0);
}

TEST(Weights, NormalisedAndNonnegative) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t d = 1 + rng() % 20, M = 2 + rng() % 60;
        const Vec pos = random_vec(rng, M * d, -3.0, 3.0);
        for (KernelKind k : {KernelKind::Gaussian, KernelKind::Epanechnikov}) {
            const std::size_t m = rng() % M;
            const Vec w = compute_weights(m, pos, d, 0.5 + rep * 0.1, KernelSpec{k});
            double s = 0.0;
            for (double v : w) {
                EXPECT_GE(v, 0.0);
                s += v;
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    }
}

TEST(Bandwidth, Rules) {
    Vec circle = {0.0, 0.0};
    for (int i = 0; i < 8; ++i) {
        circle.push_back(std::cos(i * M_PI / 4));
        circle.push_back(std::sin(i * M_PI / 4));
    }
    EXPECT_NEAR(bandwidth(0, circle, 2, BandwidthRule::max_distance(), 0.1), 1.0, 1e-15);
    EXPECT_NEAR(bandwidth(1, circle, 2, BandwidthRule::max_distance(), 0.1), 2.0, 1e-15);
    EXPECT_DOUBLE_EQ(bandwidth(0, circle, 2, BandwidthRule::scaled_sqrt_dt(2.0), 0.01), 0.2);
    EXPECT_DOUBLE_EQ(bandwidth(3, circle, 2, BandwidthRule::fixed(0.5), 0.01), 0.5);
    const Vec same(6, 1.0);
    EXPECT_THROW(bandwidth(0, same, 2, BandwidthRule::max_distance(), 0.1), DegenerateNeighborhood);
}

TEST(NormalOperator, SingleParticleExample) {
    const std::size_t d = 4;
    const Vec D = {1, 0, 0, 0}, w = {1.0};
    Vec v(d + 1, 0.0), out(d + 1);
    v[0] = 1.0;
    normal_operator_apply(D, d, w, 0.0, v, out);
    EXPECT_EQ(out, (Vec{1, 1, 0, 0, 0}));
    const Vec zero(d + 1, 0.0);
    normal_operator_apply(D, d, w, 3.0, zero, out);
    EXPECT_EQ(out, zero);
}

TEST(NormalOperator, MatchesDenseMatrix) {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t d = 1 + rng() % 10, M = 2 + rng() % 49;
        const Vec pos = random_vec(rng, M * d);
        const std::size_t m = rng() % M;
        const Vec D = centered(pos, d, m);
        const Vec w = gaussian_weights(pos, d, m);
        const double lambda = (rep % 3) * 0.01;
        const Vec v = random_vec(rng, d + 1);
        Vec out(d + 1);
        normal_operator_apply(D, d, w, lambda, v, out);
        const Eigen::VectorXd ref = dense_normal(D, d, w, lambda) * Eigen::Map<const Eigen::VectorXd>(v.data(), d + 1);
        for (std::size_t i = 0; i <= d; ++i) EXPECT_NEAR(out[i], ref(i), 1e-12);
    }
}

TEST(Solve, RecoversAffineResponses) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 1 + rng() % 8, M = d + 2 + rng() % 40;
        const Vec pos = random_vec(rng, M * d);
        const Vec g = random_vec(rng, d);
        const double a = 0.7;
        const std::size_t m = rng() % M;
        Vec Y(M);
        for (std::size_t j = 0; j < M; ++j) {
            Y[j] = a;
            for (std::size_t i = 0; i < d; ++i) Y[j] += g[i] * (pos[j * d + i] - pos[m * d + i]);
        }
        const Vec w = gaussian_weights(pos, d, m);
        const RegressionOutput out = solve_wls(m, pos, d, Y, w, 0.0, 1e-15, 1000);
        EXPECT_NEAR(out.alpha, a, 1e-8);
        for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(out.alpha_x[i], g[i], 1e-8);
    }
}

TEST(Solve, MatchesCholeskyOracle) {
    std::mt19937_64 rng(4);
    const std::size_t d = 5, M = 50;
    for (int rep = 0; rep < 10; ++rep) {
        const Vec pos = random_vec(rng, M * d);
        const Vec Y = random_vec(rng, M);
        const Vec D = centered(pos, d, 0);
        const Vec w = gaussian_weights(pos, d, 0);
        const RegressionOutput out = solve_wls_centered(D, d, Y, w, 1e-6, 1e-14, 1000);
        const Eigen::VectorXd ref = dense_solve(D, d, w, Y, 1e-6);
        EXPECT_NEAR(out.alpha, ref(0), 1e-8);
        for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(out.alpha_x[i], ref(i + 1), 1e-8);
        EXPECT_TRUE(out.converged);
    }
}

TEST(Solve, HugeRidgeShrinksToZero) {
    std::mt19937_64 rng(5);
    const std::size_t d = 4, M = 30;
    const Vec pos = random_vec(rng, M * d);
    const Vec Y = random_vec(rng, M);
    const Vec D = centered(pos, d, 0);
    const Vec w = gaussian_weights(pos, d, 0);
    const RegressionOutput out = solve_wls_centered(D, d, Y, w, 1e12, 1e-12, 100);
    Vec alpha = out.alpha_x;
    alpha.insert(alpha.begin(), out.alpha);
    EXPECT_LE(norm(alpha), dense_rhs(D, d, w, Y).norm() / 1e12 * (1 + 1e-9));
    EXPECT_LT(norm(alpha), 1e-11);
}

TEST(Solve, RidgeIsMonotone) {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 1 + rng() % 6, M = 3 + rng() % 20;
        const Vec pos = random_vec(rng, M * d);
        const Vec Y = random_vec(rng, M);
        const Vec D = centered(pos, d, 0);
        const Vec w = gaussian_weights(pos, d, 0);
        double prev = std::numeric_limits<double>::infinity();
        for (double lambda : {1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
            const RegressionOutput out = solve_wls_centered(D, d, Y, w, lambda, 1e-14, 1000);
            Vec alpha = out.alpha_x;
            alpha.insert(alpha.begin(), out.alpha);
            const double n = norm(alpha);
            EXPECT_LE(n, prev + 1e-10);
            EXPECT_NEAR(n, dense_solve(D, d, w, Y, lambda).norm(), 1e-8 * std::max(1.0, n));
            prev = n;
        }
    }
}

TEST(Solve, SymmetricCloudWithEvenResponsesHasZeroSlope) {
    std::mt19937_64 rng(7);
    const std::size_t d = 6, pairs = 20;
    Vec pos(d, 0.0);  // the anchor itself
    for (std::size_t p = 0; p < pairs; ++p) {
        const Vec v = random_vec(rng, d);
        pos.insert(pos.end(), v.begin(), v.end());
        for (double x : v) pos.push_back(-x);
    }
    const std::size_t M = pos.size() / d;
    Vec Y(M);
    for (std::size_t j = 0; j < M; ++j) {
        double r2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) r2 += pos[j * d + i] * pos[j * d + i];
        Y[j] = std::cos(r2) + r2 * r2;
    }
    const Vec w = gaussian_weights(pos, d, 0);
    const RegressionOutput out = solve_wls(0, pos, d, Y, w, 0.0, 1e-14, 1000);
    for (double g : out.alpha_x) EXPECT_NEAR(g, 0.0, 1e-10);
}

TEST(Solve, RejectsNonFiniteResponses) {
    const Vec pos = {0.0, 1.0, 2.0};
    Vec Y = {1.0, std::nan(""), 2.0};
    const Vec w = {0.5, 0.3, 0.2};
    EXPECT_THROW(solve_wls(0, pos, 1, Y, w, 0.0, 1e-10, 10), InvalidArgument);
}

TEST(Solve, DiagnosticsReportKishCount) {
    const Vec pos = {0.0, 1.0, -1.0, 2.0};
    const Vec Y = {1.0, 2.0, 0.0, 3.0};
    const Vec w(4, 0.25);
    const RegressionOutput out = solve_wls(0, pos, 1, Y, w, 0.0, 1e-12, 10);
    EXPECT_DOUBLE_EQ(out.effective_weight_count, 4.0);
    EXPECT_TRUE(out.converged);
    EXPECT_NEAR(out.alpha_x[0], 1.0, 1e-10);
}

TEST(AutoRidge, Formula) {
    const Vec D = {0, 0, 1, 0, 0, 2};
    const Vec w = {0.5, 0.25, 0.25};
    EXPECT_DOUBLE_EQ(auto_ridge_lambda(D, 2, w), 1e-8 * (0.25 * 1 + 0.25 * 4) / 2);
}

TEST(Gradient, ConstantResponsesGiveZeroZ) {
    std::mt19937_64 rng(8);
    const std::size_t d = 10, M = 40;
    const LevelState level = make_level(random_vec(rng, M * d), d);
    const ProblemSpec p = builtin_problem("linear_heat", d);
    const Vec Y(M, 3.5);
    SolverConfig c;
    const GradientEstimate g = estimate_gradient(3, level, Y, p, c, 0.01);
    // Only CG tolerance and ridge shrinkage separate the fit from (3.5, 0).
    EXPECT_LE(norm(g.z), 1e-6);
    EXPECT_NEAR(g.regression.alpha, 3.5, 1e-6);

    c.cg_tol = 1e-15;
    c.cg_maxiter = 1000;
    const GradientEstimate tight = estimate_gradient(3, level, Y, p, c, 0.01);
    const Vec D = centered(level.positions, d, 3);
    const Vec w = gaussian_weights(level.positions, d, 3);
    const Eigen::VectorXd ref = dense_solve(D, d, w, Y, tight.regression.lambda);
    EXPECT_NEAR(tight.regression.alpha, ref(0), 1e-10);
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(tight.regression.alpha_x[i], ref(i + 1), 1e-10);
    EXPECT_LE(norm(tight.z), 1e-6);
}

TEST(Gradient, ZIsSigmaTransposeSlope) {
    std::mt19937_64 rng(9);
    const std::size_t d = 3, M = 30;
    const LevelState level = make_level(random_vec(rng, M * d), d);
    const ProblemSpec p = builtin_problem("linear_heat", d, ProblemParams{}.set("sigma", 2.0));
    const Vec gvec = {0.3, -1.0, 2.0};
    Vec Y(M);
    for (std::size_t j = 0; j < M; ++j) {
        for (std::size_t i = 0; i < d; ++i) Y[j] += gvec[i] * level.positions[j * d + i];
    }
    SolverConfig c;
    c.ridge_lambda = 0.0;
    c.cg_tol = 1e-15;
    const GradientEstimate est = estimate_gradient(5, level, Y, p, c, 0.01);
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(est.z[i], 2.0 * gvec[i], 1e-8);
}

TEST(Gradient, CoincidentLevelIsDegenerate) {
    const std::size_t d = 3, M = 5;
    const LevelState level = make_level(Vec(M * d, 0.0), d);
    const ProblemSpec p = builtin_problem("linear_heat", d);
    const Vec Y = {1, 2, 3, 4, 5};
    const GradientEstimate g = estimate_gradient(0, level, Y, p, SolverConfig{}, 0.01);
    EXPECT_TRUE(g.regression.degenerate);
    EXPECT_EQ(g.z, Vec(d, 0.0));
    EXPECT_DOUBLE_EQ(g.regression.alpha, 3.0);
}

TEST(Gradient, UnderdeterminedWithAutoRidgeStaysFinite) {
    std::mt19937_64 rng(10);
    const std::size_t d = 200, M = 20;
    const LevelState level = make_level(random_vec(rng, M * d), d);
    const ProblemSpec p = builtin_problem("linear_heat", d);
    const Vec Y = random_vec(rng, M);
    const GradientEstimate g = estimate_gradient(0, level, Y, p, SolverConfig{}, 0.01);
    for (double v : g.z) EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(g.regression.lambda, 0.0);
}

TEST(Gradient, NanResponseIsInvalidArgument) {
    std::mt19937_64 rng(11);
    const std::size_t d = 2, M = 6;
    const LevelState level = make_level(random_vec(rng, M * d), d);
    const ProblemSpec p = builtin_problem("linear_heat", d);
    Vec Y(M, 1.0);
    Y[4] = std::nan("");
    EXPECT_THROW(estimate_gradient(1, level, Y, p, SolverConfig{}, 0.01), InvalidArgument);
}

// Taylor remainder 0.5 D^T H D passes through the regression as an O(eps) slope
// error: halving eps halves the gradient error.
TEST(Gradient, TaylorBiasIsLinearInBandwidth) {
    std::mt19937_64 rng(12);
    const std::size_t d = 3, M = 500;
    const Vec x0 = {0.3, -0.2, 0.5};
    const Vec cloud = random_vec(rng, M * d);  // unit-scale offsets, reused at every eps
    auto u = [](const double* x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + std::sin(x[0]) * x[2]; };
    auto grad = [](const Vec& x) {
        return Vec{2 * x[0] + std::cos(x[0]) * x[2], 2 * x[1], 2 * x[2] + std::sin(x[0])};
    };
    auto error_at = [&](double eps, bool quadratic_only) {
        Vec pos(M * d);
        for (std::size_t j = 0; j < M; ++j) {
            for (std::size_t i = 0; i < d; ++i) pos[j * d + i] = x0[i] + (j == 0 ? 0.0 : eps * cloud[j * d + i]);
        }
        Vec Y(M);
        for (std::size_t j = 0; j < M; ++j) {
            const double* x = &pos[j * d];
            Y[j] = quadratic_only ? x[0] * x[0] + x[1] * x[1] + x[2] * x[2] : u(x);
        }
        const Vec w = compute_weights(0, pos, d, eps, KernelSpec{});
        const RegressionOutput out = solve_wls(0, pos, d, Y, w, 0.0, 1e-15, 1000);
        const Vec g = quadratic_only ? Vec{2 * x0[0], 2 * x0[1], 2 * x0[2]} : grad(x0);
        Vec e(d);
        for (std::size_t i = 0; i < d; ++i) e[i] = out.alpha_x[i] - g[i];
        return norm(e);
    };
    for (bool quad : {true, false}) {
        const double e2 = error_at(0.2, quad), e1 = error_at(0.1, quad), e05 = error_at(0.05, quad);
        EXPECT_GT(e1, 0.0);
        EXPECT_GE(e2 / e1, 1.6);
        EXPECT_LE(e2 / e1, 2.4);
        EXPECT_GE(e1 / e05, 1.6);
        EXPECT_LE(e1 / e05, 2.4);
        EXPECT_LE(e05, 0.05 * 10);  // C eps with a loose C
    }
}
