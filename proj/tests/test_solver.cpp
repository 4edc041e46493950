#include "masense/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>

using namespace masense;

namespace {

constexpr double pi = std::numbers::pi;

struct DiskProblem {
    MeshPtr<2> mesh;
    ReferenceDensity<2> q;
};

DiskProblem disk(int n) {
    const auto omega = make_ball_domain<2>(Vec<2>(0, 0), 1.0);
    return {build_mesh<2>(omega, n), uniform_reference<2>(omega)};
}

double map_error(const PotentialSolution<2>& sol, const std::function<Vec<2>(const Vec<2>&)>& T) {
    double err = 0.0;
    for (int i = 0; i < sol.mesh()->size(); ++i) {
        err = std::max(err, (sol.grad_phi[i] - T(sol.mesh()->node(i))).norm());
    }
    return err;
}

}  // namespace

TEST(Gamma, ExactPotentialsHaveZeroResidual) {
    const auto [mesh, q] = disk(32);
    const auto p = uniform_dilation_curve<2>(1.0);
    for (double t : {0.0, 1.0}) {
        const double s = 1.0 + t;
        const auto phi = ScalarField<2>::sample(mesh, [s](const Vec<2>& x) { return 0.5 * s * x.squaredNorm(); });
        const auto g = assemble_gamma(t, phi, q, p);
        EXPECT_LT(g.interior.lpNorm<Eigen::Infinity>(), 1e-9);
        EXPECT_LT(g.boundary.lpNorm<Eigen::Infinity>(), 1e-9);
    }
}

TEST(Gamma, WrongScaleHasKnownResidual) {
    const auto [mesh, q] = disk(16);
    const auto p = uniform_dilation_curve<2>(0.0);
    // grad phi = 0.5 x: det = 1/4 and h(0.5 x) on the unit circle is (0.25 - 1)/2.
    const auto phi = ScalarField<2>::sample(mesh, [](const Vec<2>& x) { return 0.25 * x.squaredNorm(); });
    const auto g = assemble_gamma(0.0, phi, q, p);
    for (int i = 0; i < g.interior.size(); ++i) EXPECT_NEAR(g.interior[i], std::log(0.25), 1e-9);
    const auto& domain = p.support_at(0.0);
    for (int k = 0; k < g.boundary.size(); ++k) {
        const Vec<2> y = 0.5 * mesh->node(mesh->n_interior() + k);
        EXPECT_NEAR(g.boundary[k], domain.h(y), 1e-9);
        EXPECT_LT(g.boundary[k], 0.0);
    }
}

TEST(Gamma, InvariantUnderConstantShift) {
    const auto [mesh, q] = disk(16);
    const auto p = gaussian_bump_curve<2>(static_domain_curve<2>(q.domain(), {-0.25, 1.25}), 1.0);
    auto f = [](const Vec<2>& x) { return 0.4 * x.squaredNorm() + 0.05 * x[0] * x[0] * x[1]; };
    const auto a = assemble_gamma(0.5, ScalarField<2>::sample(mesh, f), q, p);
    const auto b = assemble_gamma(0.5, ScalarField<2>::sample(mesh, [&](const Vec<2>& x) { return f(x) + 3.7; }), q, p);
    EXPECT_LT((a.interior - b.interior).lpNorm<Eigen::Infinity>(), 1e-9);
    EXPECT_LT((a.boundary - b.boundary).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Gamma, NonConvexPotentialIsRejected) {
    const auto [mesh, q] = disk(16);
    const auto p = uniform_dilation_curve<2>(0.0);
    const auto saddle = ScalarField<2>::sample(mesh, [](const Vec<2>& x) { return 0.5 * (x[0] * x[0] - x[1] * x[1]); });
    EXPECT_THROW(assemble_gamma(0.0, saddle, q, p), ConvexityViolation);
    const auto concave = ScalarField<2>::sample(mesh, [](const Vec<2>& x) { return -0.5 * x.squaredNorm(); });
    EXPECT_THROW(assemble_gamma(0.0, concave, q, p), ConvexityViolation);
}

TEST(Gamma, GradientOutsideRangeIsRejected) {
    const auto [mesh, q] = disk(16);
    const auto p = uniform_dilation_curve<2>(0.0);
    const auto steep = ScalarField<2>::sample(mesh, [](const Vec<2>& x) { return 2.0 * x.squaredNorm(); });
    EXPECT_THROW(assemble_gamma(0.0, steep, q, p), RangeViolation);
}

TEST(Solve, IdentityMap) {
    const auto [mesh, q] = disk(32);
    const auto p = uniform_dilation_curve<2>(0.0);
    const auto sol = solve_monge_ampere<2>(0.3, q, p, mesh);
    EXPECT_LT(map_error(sol, [](const Vec<2>& x) { return x; }), 1e-8);
    EXPECT_LE(sol.residual_interior, 1e-9);
    EXPECT_LE(sol.residual_boundary, 1e-9);
    EXPECT_NEAR(sol.beta, 1.0, 1e-6);
    EXPECT_NEAR(sol.rho, 1.0, 1e-6);
}

TEST(Solve, DilationIsExact) {
    const auto [mesh, q] = disk(32);
    const auto p = uniform_dilation_curve<2>(1.0);
    for (double t : {0.0, 0.5, 1.0}) {
        const auto sol = solve_monge_ampere<2>(t, q, p, mesh);
        EXPECT_LT(map_error(sol, [t](const Vec<2>& x) { return (1 + t) * x; }), 1e-8) << "t = " << t;
        EXPECT_NEAR(sol.beta, std::max(1 + t, 1 / (1 + t)), 1e-6);
        EXPECT_LE(std::abs(sol.mass_defect), 1e-8);
    }
}

TEST(Solve, TranslationIsExact) {
    const auto [mesh, q] = disk(32);
    const Vec<2> v(0.5, -0.25);
    const auto p = translation_curve<2>(v);
    const auto sol = solve_monge_ampere<2>(0.6, q, p, mesh);
    EXPECT_LT(map_error(sol, [&](const Vec<2>& x) { return (x + 0.6 * v).eval(); }), 1e-8);
    EXPECT_NEAR(sol.rho, 1.0, 1e-6);
}

TEST(Solve, ResidualHistoryDecreases) {
    const auto [mesh, q] = disk(32);
    const auto p = gaussian_bump_curve<2>(static_domain_curve<2>(q.domain(), {-0.25, 1.25}), 1.0);
    const auto sol = solve_monge_ampere<2>(0.5, q, p, mesh);
    ASSERT_GE(sol.residual_history.size(), 2u);
    EXPECT_LT(sol.residual_history.back(), sol.residual_history.front());
    EXPECT_LE(sol.residual_history.back(), 1e-9);
    // Quadratic convergence at the end: the last step squares the residual.
    const std::size_t k = sol.residual_history.size() - 1;
    EXPECT_LT(sol.residual_history[k], 10.0 * std::pow(sol.residual_history[k - 1], 1.5));
    EXPECT_EQ(sol.newton_iters + 1, static_cast<int>(sol.residual_history.size()));
}

TEST(Solve, ConstraintNormalization) {
    const auto [mesh, q] = disk(32);
    const auto p = gaussian_bump_curve<2>(static_domain_curve<2>(q.domain(), {-0.25, 1.25}), 1.0);
    const auto sol = solve_monge_ampere<2>(0.5, q, p, mesh);
    const int ni = mesh->n_interior();
    const double c = sol.constraint_weights.dot(sol.phi.values().tail(mesh->n_boundary()));
    EXPECT_NEAR(c, 0.0, 1e-12);
    // Constraint weights integrate p_t over the target boundary.
    double boundary_mass = 0.0;
    for (int k = 0; k < mesh->n_boundary(); ++k) boundary_mass += sol.constraint_weights[k];
    const double r = 1.0;
    EXPECT_NEAR(boundary_mass, 2 * pi * r * p.p(0.5, Vec<2>(1.0, 0.0)), 1e-3);
    (void)ni;
}

TEST(Solve, RadialBumpMatchesOracle) {
    const auto [mesh, q] = disk(64);
    const auto p = gaussian_bump_curve<2>(static_domain_curve<2>(q.domain(), {-0.25, 1.25}), 1.0);
    RadialOracle oracle(p, q);
    const auto sol = solve_monge_ampere<2>(0.5, q, p, mesh);
    EXPECT_LT(map_error(sol, [&](const Vec<2>& x) { return oracle(0.5, x).first; }), 5e-3);
}

TEST(Solve, OneDimensionalTiltMatchesOracle) {
    const auto omega = make_ball_domain<1>(Vec<1>::Constant(0.5), 0.5);
    const auto mesh = build_mesh<1>(omega, 256);
    const auto q = uniform_reference<1>(omega);
    const auto p = exponential_tilt_curve(static_domain_curve<1>(omega, {-0.25, 1.25}), 1.0);
    TransportOracle1D oracle(p, q);
    const auto sol = solve_monge_ampere<1>(0.5, q, p, mesh);
    double err = 0.0;
    for (int i = 0; i < mesh->size(); ++i) {
        err = std::max(err, std::abs(sol.grad_phi[i][0] - oracle.map(0.5, mesh->node(i)[0])));
    }
    EXPECT_LT(err, 1e-4);
}

TEST(Diagnostics, PushforwardAndMonotonicity) {
    const auto [mesh, q] = disk(64);
    const auto p = gaussian_bump_curve<2>(dilation_domain_curve<2>(0.5), 1.0);
    const auto sol = solve_monge_ampere<2>(0.3, q, p, mesh);
    EXPECT_LT(pushforward_check(sol, q, p), 2e-3);
    EXPECT_GT(monotonicity_check(sol), 0.0);
    EXPECT_GT(sol.rho, 0.0);
    EXPECT_GT(sol.rho_floor, 0.0);
    EXPECT_GE(sol.beta, 1.0);
    EXPECT_NEAR(hessian_bound(sol.hess_phi), sol.beta, 0.0);
}

TEST(Diagnostics, ObliquenessOfExactMaps) {
    const auto [mesh, q] = disk(32);
    const auto p = uniform_dilation_curve<2>(1.0);
    const auto sol = solve_monge_ampere<2>(1.0, q, p, mesh);
    const auto obl = diagnostics_obliqueness(sol, p);
    EXPECT_NEAR(obl.rho, 1.0, 1e-8);
    EXPECT_NEAR(obl.floor, 0.25, 1e-6);
}

TEST(Failures, IterationCap) {
    const auto [mesh, q] = disk(32);
    const auto p = translation_curve<2>(Vec<2>(0.5, 0.0));
    SolverOptions opts;
    opts.max_newton = 1;
    try {
        solve_monge_ampere<2>(1.0, q, p, mesh, std::nullopt, opts);
        FAIL() << "expected NonConvergence";
    } catch (const Stagnation&) {
        FAIL() << "expected the iteration cap, not stagnation";
    } catch (const NonConvergence& e) {
        EXPECT_EQ(e.iterations, 1);
        EXPECT_GT(std::max(e.residual_interior, e.residual_boundary), 1e-9);
    }
}

TEST(Failures, LineSearchStagnation) {
    const auto [mesh, q] = disk(32);
    const auto p = translation_curve<2>(Vec<2>(0.5, 0.0));
    SolverOptions opts;
    opts.armijo = 0.9999;
    opts.min_step = 0.4;
    EXPECT_THROW(solve_monge_ampere<2>(1.0, q, p, mesh, std::nullopt, opts), Stagnation);
}

TEST(Failures, InvalidArguments) {
    const auto [mesh, q] = disk(16);
    const auto p = uniform_dilation_curve<2>(1.0);
    EXPECT_THROW(solve_monge_ampere<2>(2.0, q, p, mesh), InvalidArgument);
    SolverOptions opts;
    opts.reference_node = mesh->size() - 1;
    EXPECT_THROW(solve_monge_ampere<2>(0.0, q, p, mesh, std::nullopt, opts), InvalidArgument);
    const auto other = build_mesh<2>(q.domain(), 16);
    const auto init = ScalarField<2>::constant(other, 0.0);
    EXPECT_THROW(solve_monge_ampere<2>(0.0, q, p, mesh, init), InvalidArgument);
}

TEST(Solve, WarmStartConvergesFaster) {
    const auto [mesh, q] = disk(32);
    const auto p = gaussian_bump_curve<2>(dilation_domain_curve<2>(0.5), 1.0);
    const auto cold = solve_monge_ampere<2>(0.3, q, p, mesh);
    const auto warm = solve_monge_ampere<2>(0.32, q, p, mesh, cold.phi);
    EXPECT_LE(warm.newton_iters, cold.newton_iters);
}

TEST(Solve, ConcurrentSolvesMatchSerial) {
    const auto [mesh, q] = disk(32);
    const auto p = gaussian_bump_curve<2>(dilation_domain_curve<2>(0.5), 1.0);
    const auto serial_a = solve_monge_ampere<2>(0.1, q, p, mesh);
    const auto serial_b = solve_monge_ampere<2>(0.3, q, p, mesh);
    std::optional<PotentialSolution<2>> a, b;
    std::thread ta([&] { a = solve_monge_ampere<2>(0.1, q, p, mesh); });
    std::thread tb([&] { b = solve_monge_ampere<2>(0.3, q, p, mesh); });
    ta.join();
    tb.join();
    EXPECT_EQ(a->phi.values(), serial_a.phi.values());
    EXPECT_EQ(b->phi.values(), serial_b.phi.values());
}
