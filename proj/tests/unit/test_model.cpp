#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fbllr/error.hpp"
#include "fbllr/problem.hpp"
#include "test_util.hpp"

using namespace fbllr;

namespace {

double isotropic_half_c2(const ProblemSpec& p) {
    const double c = p.diffusion.isotropic_coefficient();
    return 0.5 * c * c;
}

// (du/dt + L u + f)(t, x) with every derivative taken by central differences.
// The Laplacian differentiates the analytic gradient once; the gradient itself
// is checked separately against differences of u.
double pde_residual(const ProblemSpec& p, double t, const Vec& x) {
    const std::size_t d = p.dimension;
    const double h = 1e-5;
    const auto& ex = *p.exact;
    const double ut = (ex.u(t + h, x) - ex.u(t - h, x)) / (2 * h);
    double lap = 0.0;
    Vec xp = x, xm = x, gp(d), gm(d);
    for (std::size_t i = 0; i < d; ++i) {
        xp[i] += h;
        xm[i] -= h;
        ex.grad_u(t, xp, gp);
        ex.grad_u(t, xm, gm);
        lap += (gp[i] - gm[i]) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    Vec grad(d);
    ex.grad_u(t, x, grad);
    const Vec z = apply_diffusion_transpose(p.diffusion, t, x, grad);
    return ut + isotropic_half_c2(p) * lap + p.driver(t, x, ex.u(t, x), z);
}

double gradient_fd_error(const ProblemSpec& p, double t, const Vec& x) {
    const double h = 1e-5;
    Vec grad(p.dimension), xp = x, xm = x;
    p.exact->grad_u(t, x, grad);
    double err = 0.0;
    for (std::size_t i = 0; i < p.dimension; ++i) {
        xp[i] += h;
        xm[i] -= h;
        err = std::max(err, std::abs((p.exact->u(t, xp) - p.exact->u(t, xm)) / (2 * h) - grad[i]));
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return err;
}

Vec random_in_ball(std::mt19937_64& rng, std::size_t d, double radius) {
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec x(d);
    double r2 = 0.0;
    for (auto& v : x) {
        v = n(rng);
        r2 += v * v;
    }
    const double scale = radius * std::pow(u(rng), 1.0 / static_cast<double>(d)) / std::sqrt(r2);
    for (auto& v : x) v *= scale;
    return x;
}

}  // namespace

TEST(Model, AllenCahnDefaults) {
    const ProblemSpec p = builtin_problem("allen_cahn_dw", 100);
    EXPECT_EQ(p.dimension, 100u);
    EXPECT_DOUBLE_EQ(p.horizon, 0.3);
    EXPECT_EQ(p.query_point, Vec(100, 0.0));
    ASSERT_TRUE(p.cited_reference.has_value());
    EXPECT_DOUBLE_EQ(*p.cited_reference, 0.0528);
    EXPECT_FALSE(p.exact.has_value());
    EXPECT_DOUBLE_EQ(p.diffusion.isotropic_coefficient(), std::sqrt(2.0));
    const Vec x(100, 0.0), z(100, 0.0);
    EXPECT_DOUBLE_EQ(p.driver(0.0, x, 0.5, z), 0.5 - 0.125);
    EXPECT_DOUBLE_EQ(p.terminal(x), 0.5);
}

TEST(Model, CitedReferenceOnlyForThePublishedSetting) {
    EXPECT_FALSE(builtin_problem("allen_cahn_dw", 50).cited_reference.has_value());
    EXPECT_FALSE(builtin_problem("allen_cahn_dw", 100, ProblemParams{}.set("T", 0.5)).cited_reference.has_value());
}

TEST(Model, AffineTerminal) {
    ProblemParams params;
    params.set("a", Vec{1, 2, 3}).set("b", 5.0);
    const ProblemSpec p = builtin_problem("affine_test", 3, params);
    const Vec x = {1.0, -1.0, 0.5};
    EXPECT_DOUBLE_EQ(p.terminal(x), 1.0 - 2.0 + 1.5 + 5.0);
    EXPECT_EQ(p.driver(0.1, x, 3.0, x), 0.0);
}

TEST(Model, HjExactValueAtOrigin) {
    const ProblemSpec p = builtin_problem("hj_gradient_sink", 500);
    EXPECT_DOUBLE_EQ(p.exact->u(0.0, Vec(500, 0.0)), 1.0);
}

TEST(Model, HjSourceAtOrigin) {
    for (std::size_t d : {1u, 5u, 50u}) {
        const ProblemSpec p = builtin_problem("hj_gradient_sink", d);
        const Vec x(d, 0.0), z(d, 0.0);
        // grad u = 0 at the origin, so f = source = 2d + 2d.
        EXPECT_NEAR(p.driver(0.0, x, 1.0, z), 4.0 * static_cast<double>(d), 1e-12 * static_cast<double>(d));
    }
}

TEST(Model, ManufacturedSourceOfConstant) {
    const double c = 0.3;
    ExactSolution ex;
    ex.u = [c](double, std::span<const double>) { return c; };
    ex.grad_u = [](double, std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
    ex.dt_u = [](double, std::span<const double>) { return 0.0; };
    ex.laplacian = [](double, std::span<const double>) { return 0.0; };
    auto src = manufactured_source(ex, Isotropic{1.0}, {},
                                   [](double, std::span<const double>, double u, std::span<const double>) {
                                       return u - u * u * u;
                                   });
    const Vec x = {0.2, 0.4};
    EXPECT_DOUBLE_EQ(src(0.1, x), -(c - c * c * c));
}

TEST(Model, PdeResidualOfBuiltinsWithExactSolutions) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const std::string name : {"allen_cahn_log", "burgers", "hj_gradient_sink", "linear_heat", "affine_test"}) {
        for (std::size_t d : {1u, 3u, 10u}) {
            const ProblemSpec p = builtin_problem(name, d);
            ASSERT_TRUE(p.exact.has_value()) << name;
            double worst = 0.0, worst_grad = 0.0;
            for (int i = 0; i < 100; ++i) {
                const double t = unit(rng) * p.horizon * 0.999;
                const Vec x = random_in_ball(rng, d, 1.0);
                worst = std::max(worst, std::abs(pde_residual(p, t, x)));
                worst_grad = std::max(worst_grad, gradient_fd_error(p, t, x));
            }
            EXPECT_LE(worst, 1e-6) << name << " d=" << d;
            EXPECT_LE(worst_grad, 1e-7) << name << " d=" << d;
        }
    }
}

TEST(Model, BurgersMidpointForAnyViscosity) {
    for (std::size_t d : {1u, 10u, 500u}) {
        for (double nu : {0.01, 1.0 / static_cast<double>(d), 2.0}) {
            const ProblemSpec p = builtin_problem("burgers", d, ProblemParams{}.set("nu", nu));
            EXPECT_DOUBLE_EQ(p.exact->u(0.0, Vec(d, 0.0)), 0.5);
        }
    }
}

TEST(Model, TerminalMatchesExact) {
    std::mt19937_64 rng(5);
    for (const std::string name : {"allen_cahn_log", "burgers", "hj_gradient_sink", "linear_heat", "affine_test"}) {
        const ProblemSpec p = builtin_problem(name, 4);
        for (int i = 0; i < 20; ++i) {
            const Vec x = fbllr::testing::random_vec(rng, 4);
            EXPECT_NEAR(p.terminal(x), p.exact->u(p.horizon, x), 1e-10) << name;
        }
    }
}

TEST(Model, ValidateRejectsBrokenSpecs) {
    ProblemSpec p = builtin_problem("linear_heat", 2);
    EXPECT_NO_THROW(p.validate());
    ProblemSpec bad_t = p;
    bad_t.horizon = 0.0;
    EXPECT_THROW(bad_t.validate(), InvalidArgument);
    ProblemSpec bad_q = p;
    bad_q.query_point = {0.0};
    EXPECT_THROW(bad_q.validate(), InvalidArgument);
    ProblemSpec bad_g = p;
    bad_g.terminal = [](std::span<const double>) { return 42.0; };
    EXPECT_THROW(bad_g.validate(), InvalidArgument);
    ProblemSpec bad_sigma = p;
    bad_sigma.diffusion = Diagonal{{1.0, 1.0, 1.0}};
    EXPECT_THROW(bad_sigma.validate(), InvalidArgument);
    EXPECT_THROW(builtin_problem("linear_heat", 0), InvalidArgument);
}

TEST(Model, BuiltinErrors) {
    EXPECT_THROW(builtin_problem("heat_death", 2), NotFound);
    EXPECT_THROW(builtin_problem("burgers", 2, ProblemParams{}.set("kappa", 1.0)), InvalidArgument);
    EXPECT_THROW(builtin_problem("allen_cahn_log", 2, ProblemParams{}.set("theta", 3.0)), InvalidArgument);
    EXPECT_THROW(builtin_problem("burgers", 2, ProblemParams{}.set("nu", -1.0)), InvalidArgument);
    EXPECT_THROW(builtin_problem("burgers", 2, ProblemParams{}.set("T", std::nan(""))), InvalidArgument);
}

TEST(Model, BuiltinIsDeterministic) {
    std::mt19937_64 rng(9);
    for (const auto& name : builtin_problem_names()) {
        const ProblemSpec a = builtin_problem(name, 6), b = builtin_problem(name, 6);
        for (int i = 0; i < 10; ++i) {
            const Vec x = fbllr::testing::random_vec(rng, 6), z = fbllr::testing::random_vec(rng, 6);
            EXPECT_EQ(a.terminal(x), b.terminal(x)) << name;
            EXPECT_EQ(a.driver(0.1, x, 0.3, z), b.driver(0.1, x, 0.3, z)) << name;
        }
    }
}

TEST(Model, LogPotentialGuardCountsClamps) {
    const ProblemSpec p = builtin_problem("allen_cahn_log", 2);
    const Vec x = {0.1, 0.2}, z = {0.0, 0.0};
    EXPECT_EQ(p.counters->log_clamps.load(), 0u);
    const double v = p.driver(0.5, x, 1.0, z);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(p.counters->log_clamps.load(), 1u);
    EXPECT_TRUE(std::isfinite(p.driver(0.5, x, 2.718, z)));
    EXPECT_EQ(p.counters->log_clamps.load(), 1u);
}

TEST(Model, ParamsBroadcastScalars) {
    ProblemParams params;
    params.set("x0", 0.1);
    EXPECT_EQ(params.vector("x0", 3, 0.0), (Vec{0.1, 0.1, 0.1}));
    EXPECT_EQ(params.vector("missing", 2, 7.0), (Vec{7.0, 7.0}));
    params.set("x0", Vec{1, 2});
    EXPECT_THROW(params.vector("x0", 3, 0.0), InvalidArgument);
    const ProblemSpec p = builtin_problem("linear_heat", 3, ProblemParams{}.set("x0", 0.1));
    EXPECT_EQ(p.query_point, (Vec{0.1, 0.1, 0.1}));
}

TEST(Model, GeneratorMatchesDiagonalHessian) {
    const ProblemSpec p = builtin_problem("hj_gradient_sink", 3);
    const Vec x = {0.1, -0.2, 0.3};
    const double lap = p.exact->laplacian(0.2, x);
    EXPECT_NEAR(apply_generator(*p.exact, p.diffusion, {}, 0.2, x), lap, 1e-14);
}
