#include "masense/linearized.hpp"
#include "masense/linearized_operator.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <random>

using namespace masense;

namespace {

constexpr double pi = std::numbers::pi;

struct Setup {
    MeshPtr<2> mesh;
    ReferenceDensity<2> q;
    DensityCurve<2> p;
    PotentialSolution<2> sol;
};

Setup solved(int n, DensityCurve<2> p, double t) {
    const auto omega = make_ball_domain<2>(Vec<2>(0, 0), 1.0);
    auto mesh = build_mesh<2>(omega, n);
    auto q = uniform_reference<2>(omega);
    auto sol = solve_monge_ampere<2>(t, q, p, mesh);
    return {mesh, q, std::move(p), std::move(sol)};
}

Setup identity(int n) { return solved(n, uniform_dilation_curve<2>(0.0), 0.0); }

DensityCurve<2> bump(double amplitude = 1.0) {
    return gaussian_bump_curve<2>(
        static_domain_curve<2>(make_ball_domain<2>(Vec<2>(0, 0), 1.0), {-0.25, 1.25}), amplitude);
}

Eigen::VectorXd interior_values(const Mesh<2>& mesh, const std::function<double(const Vec<2>&)>& f) {
    Eigen::VectorXd v(mesh.n_interior());
    for (int i = 0; i < mesh.n_interior(); ++i) v[i] = f(mesh.node(i));
    return v;
}

Eigen::VectorXd boundary_values(const Mesh<2>& mesh, const std::function<double(const Vec<2>&)>& f) {
    Eigen::VectorXd v(mesh.n_boundary());
    for (int k = 0; k < mesh.n_boundary(); ++k) v[k] = f(mesh.node(mesh.n_interior() + k));
    return v;
}

double sup_error(const Mesh<2>& mesh, const ScalarField<2>& xi, const std::function<double(const Vec<2>&)>& exact) {
    double err = 0.0;
    for (int i = 0; i < mesh.size(); ++i) err = std::max(err, std::abs(xi[i] - exact(mesh.node(i))));
    return err;
}

double sup_error(const Mesh<2>& mesh, const VectorField<2>& g, const std::function<Vec<2>(const Vec<2>&)>& exact) {
    double err = 0.0;
    for (int i = 0; i < mesh.size(); ++i) err = std::max(err, (g[i] - exact(mesh.node(i))).norm());
    return err;
}

}  // namespace

TEST(Operator, AnnihilatesConstants) {
    const auto s = solved(32, bump(), 0.4);
    const auto v = apply_linearized_operator(s.sol, s.p, ScalarField<2>::constant(s.mesh, 2.75));
    EXPECT_LT(v.interior.lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_LT(v.boundary.lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Operator, IdentityQuadratic) {
    const auto s = identity(32);
    const auto xi = ScalarField<2>::sample(s.mesh, [](const Vec<2>& x) { return 0.5 * x.squaredNorm(); });
    const auto v = apply_linearized_operator(s.sol, s.p, xi);
    for (int i = 0; i < v.interior.size(); ++i) EXPECT_NEAR(v.interior[i], 2.0, 1e-8);
    for (int k = 0; k < v.boundary.size(); ++k) EXPECT_NEAR(v.boundary[k], 1.0, 1e-8);
}

TEST(Operator, IdentityLinear) {
    const auto s = identity(32);
    const auto xi = ScalarField<2>::sample(s.mesh, [](const Vec<2>& x) { return x[0]; });
    const auto v = apply_linearized_operator(s.sol, s.p, xi);
    EXPECT_LT(v.interior.lpNorm<Eigen::Infinity>(), 1e-9);
    for (int k = 0; k < v.boundary.size(); ++k) {
        EXPECT_NEAR(v.boundary[k], s.mesh->node(s.mesh->n_interior() + k)[0], 1e-9);
    }
}

TEST(Operator, RejectsFieldOnOtherMesh) {
    const auto s = identity(16);
    const auto other = build_mesh<2>(s.q.domain(), 16);
    EXPECT_THROW(apply_linearized_operator(s.sol, s.p, ScalarField<2>::constant(other, 1.0)), InvalidArgument);
}

TEST(BoundaryImage, Integrals) {
    const auto s = identity(64);
    const int nb = s.mesh->n_boundary();
    EXPECT_NEAR(boundary_image_integral(s.sol, Eigen::VectorXd::Ones(nb)), 2.0, 1e-3);
    EXPECT_NEAR(boundary_image_integral(s.sol, boundary_values(*s.mesh, [](const Vec<2>& x) { return x[0]; })),
                0.0, 1e-10);
    const auto d = solved(64, uniform_dilation_curve<2>(1.0), 1.0);
    EXPECT_NEAR(boundary_image_integral(d.sol, Eigen::VectorXd::Ones(d.mesh->n_boundary())), 1.0, 1e-3);
    EXPECT_THROW(boundary_image_integral(s.sol, Eigen::VectorXd::Ones(3)), InvalidArgument);
}

TEST(Compatibility, Examples) {
    const auto s = identity(64);
    const int ni = s.mesh->n_interior(), nb = s.mesh->n_boundary();
    EXPECT_EQ(check_compatibility(Eigen::VectorXd::Zero(ni), Eigen::VectorXd::Zero(nb), s.sol, s.q), 0.0);
    EXPECT_NEAR(check_compatibility(Eigen::VectorXd::Ones(ni), Eigen::VectorXd::Zero(nb), s.sol, s.q), 1.0, 1e-3);
    // Sensitivity data of the dilation family at t = 0.
    const auto d = solved(64, uniform_dilation_curve<2>(1.0), 0.0);
    EXPECT_NEAR(check_compatibility(Eigen::VectorXd::Constant(d.mesh->n_interior(), 2.0),
                                    Eigen::VectorXd::Ones(d.mesh->n_boundary()), d.sol, d.q),
                0.0, 2e-3);
}

TEST(Projection, Examples) {
    const auto s = identity(64);
    const int ni = s.mesh->n_interior(), nb = s.mesh->n_boundary();
    const auto a = project_rhs(make_rhs(Eigen::VectorXd::Ones(ni), Eigen::VectorXd::Zero(nb), s.sol, s.q), s.sol, s.q);
    EXPECT_LT(a.f.lpNorm<Eigen::Infinity>(), 1e-12);
    const auto b = project_rhs(make_rhs(Eigen::VectorXd::Zero(ni), Eigen::VectorXd::Ones(nb), s.sol, s.q), s.sol, s.q);
    for (int i = 0; i < ni; ++i) EXPECT_NEAR(b.f[i], 2.0, 5e-3);
    EXPECT_NEAR(b.compat_residual, 0.0, 1e-12);
    // Idempotent on compatible data.
    const auto c = project_rhs(b, s.sol, s.q);
    EXPECT_LT((c.f - b.f).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_EQ(c.g, b.g);
}

TEST(SolveLinearized, ZeroData) {
    const auto s = solved(32, bump(), 0.2);
    const auto rhs = make_rhs(Eigen::VectorXd::Zero(s.mesh->n_interior()), Eigen::VectorXd::Zero(s.mesh->n_boundary()),
                              s.sol, s.q);
    const auto lin = solve_linearized(s.sol, s.q, s.p, rhs);
    EXPECT_LE(lin.xi.values().lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(SolveLinearized, IdentityQuadraticSolution) {
    const auto s = identity(64);
    const auto rhs = project_rhs(make_rhs(Eigen::VectorXd::Constant(s.mesh->n_interior(), 2.0),
                                          Eigen::VectorXd::Ones(s.mesh->n_boundary()), s.sol, s.q),
                                 s.sol, s.q);
    const auto lin = solve_linearized(s.sol, s.q, s.p, rhs);
    EXPECT_LT(sup_error(*s.mesh, lin.xi, [](const Vec<2>& x) { return 0.5 * (x.squaredNorm() - 1.0); }), 5e-3);
    EXPECT_NEAR(lin.constraint_residual, 0.0, 1e-12);
    EXPECT_LE(std::abs(lin.fredholm_multiplier), 1e-8 * lin.rhs_scale);
}

TEST(SolveLinearized, IdentityLinearSolution) {
    const auto s = identity(64);
    const auto rhs = make_rhs(Eigen::VectorXd::Zero(s.mesh->n_interior()),
                              boundary_values(*s.mesh, [](const Vec<2>& x) { return x[0]; }), s.sol, s.q);
    const auto lin = solve_linearized(s.sol, s.q, s.p, rhs);
    EXPECT_LT(sup_error(*s.mesh, lin.xi, [](const Vec<2>& x) { return x[0]; }), 5e-3);
}

TEST(SolveLinearized, RejectsIncompatibleData) {
    const auto s = identity(32);
    const auto rhs = make_rhs(Eigen::VectorXd::Ones(s.mesh->n_interior()), Eigen::VectorXd::Zero(s.mesh->n_boundary()),
                              s.sol, s.q);
    EXPECT_THROW(solve_linearized(s.sol, s.q, s.p, rhs), CompatibilityError);
}

TEST(Sensitivity, StaticFamilyIsZero) {
    const auto s = identity(32);
    const auto lin = sensitivity(s.sol, s.q, s.p);
    EXPECT_LT(lin.xi.values().lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Sensitivity, Dilation) {
    const auto s = solved(64, uniform_dilation_curve<2>(1.0), 0.0);
    const auto lin = sensitivity(s.sol, s.q, s.p);
    EXPECT_LT(sup_error(*s.mesh, lin.xi, [](const Vec<2>& x) { return 0.5 * (x.squaredNorm() - 1.0); }), 5e-3);
    EXPECT_LT(sup_error(*s.mesh, lin.grad_xi, [](const Vec<2>& x) { return x; }), 5e-3);
}

TEST(Sensitivity, Translation) {
    const auto s = solved(64, translation_curve<2>(Vec<2>(1.0, 0.0)), 0.0);
    const auto lin = sensitivity(s.sol, s.q, s.p);
    EXPECT_LT(sup_error(*s.mesh, lin.grad_xi, [](const Vec<2>&) { return Vec<2>(1.0, 0.0); }), 5e-3);
}

TEST(Sensitivity, FiniteDifferenceOracleOnDilation) {
    const auto s = solved(64, uniform_dilation_curve<2>(1.0), 0.0);
    const auto lin = sensitivity(s.sol, s.q, s.p);
    const auto fd = fd_sensitivity_oracle(s.sol, s.q, s.p, 1e-3);
    EXPECT_LT((fd.values() - lin.xi.values()).lpNorm<Eigen::Infinity>(), 5e-3);
}

TEST(Sensitivity, FiniteDifferenceOracleOnStaticFamily) {
    const auto s = identity(32);
    const double eps = 1e-3;
    const auto fd = fd_sensitivity_oracle(s.sol, s.q, s.p, eps);
    EXPECT_LE(fd.values().lpNorm<Eigen::Infinity>(), 2 * 1e-9 / eps);
}

TEST(Sensitivity, FiniteDifferenceSlopeOnBump) {
    const auto s = solved(64, bump(), 0.2);
    const auto lin = sensitivity(s.sol, s.q, s.p);
    std::vector<double> err;
    for (double eps : {4e-3, 2e-3, 1e-3}) {
        err.push_back((fd_sensitivity_oracle(s.sol, s.q, s.p, eps).values() - lin.xi.values()).lpNorm<Eigen::Infinity>());
    }
    EXPECT_GE(std::log2(err[0] / err[2]) / 2.0, 1.9);
}

TEST(Sensitivity, FiniteDifferenceOracleRejectsBadEps) {
    const auto s = identity(16);
    EXPECT_THROW(fd_sensitivity_oracle(s.sol, s.q, s.p, 0.0), InvalidArgument);
    EXPECT_THROW(fd_sensitivity_oracle(s.sol, s.q, s.p, 0.5), InvalidArgument);
}

TEST(Kernel, SingleNearNullDirection) {
    const auto s = solved(32, bump(), 0.2);
    const Eigen::MatrixXd J(linearized_matrix<2>(*s.mesh, s.sol.t, s.p, s.sol.grad_phi, s.sol.hess_phi));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(J);
    const auto& sigma = svd.singularValues();
    const int n = static_cast<int>(sigma.size());
    EXPECT_LE(sigma[n - 1], 1e-8 * sigma[0]);
    EXPECT_GE(sigma[n - 2], 1e-6 * sigma[0]);
}

TEST(Kernel, FinalNewtonCorrectionIsSmall) {
    const auto s = solved(32, bump(), 0.3);
    const auto& mesh = *s.mesh;
    const auto gamma = assemble_gamma(0.3, s.sol.phi, s.q, s.p);
    Eigen::VectorXd F(mesh.size());
    F << gamma.interior.array() + s.sol.mass_defect, gamma.boundary;
    const SparseOp J = linearized_matrix<2>(mesh, 0.3, s.p, s.sol.grad_phi, s.sol.hess_phi);
    Eigen::VectorXd column = Eigen::VectorXd::Zero(mesh.size());
    column.head(mesh.n_interior()).setOnes();
    Eigen::VectorXd pin = Eigen::VectorXd::Zero(mesh.size());
    pin[mesh.nearest_node(Vec<2>(0, 0))] = 1.0;
    const auto step = solve_bordered(J, column, pin, -F);
    EXPECT_LE(step.x.lpNorm<Eigen::Infinity>(), 1e-9 * 1e3);
}

TEST(Dichotomy, RandomPairs) {
    const auto s = solved(32, bump(), 0.2);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const double a0 = nd(rng), a1 = nd(rng), a2 = nd(rng), a3 = nd(rng);
        const double b0 = nd(rng), b1 = nd(rng), b2 = nd(rng);
        auto f = [&](const Vec<2>& x) { return a0 + a1 * x[0] + a2 * std::sin(2 * x[1]) + a3 * x.squaredNorm(); };
        auto g = [&](const Vec<2>& x) { return b0 + b1 * x[1] + b2 * std::cos(x[0]); };
        const auto raw = make_rhs(interior_values(*s.mesh, f), boundary_values(*s.mesh, g), s.sol, s.q);
        const auto rhs = project_rhs(raw, s.sol, s.q);
        const auto lin = solve_linearized(s.sol, s.q, s.p, rhs);
        EXPECT_LE(std::abs(lin.fredholm_multiplier), 1e-8 * rhs.scale()) << "trial " << trial;
        LinearizedRHS bad = rhs;
        bad.f.array() += 0.5;
        EXPECT_THROW(solve_linearized(s.sol, s.q, s.p, bad), CompatibilityError) << "trial " << trial;
    }
}

TEST(Reynolds, DensityIntegrandBalances) {
    const auto p = gaussian_bump_curve<2>(dilation_domain_curve<2>(1.0), 1.0);
    const auto r = reynolds_check(density_integrand(p), p.support(), 0.5, 1e-3);
    EXPECT_LT(r.residual, 1e-4);
    EXPECT_LT(std::abs(r.lhs), 1e-6);
    EXPECT_LT(density_flux_balance(p, 0.5), 1e-6);
}

TEST(Reynolds, StaticDomainLinearIntegrand) {
    const auto omega = make_ball_domain<2>(Vec<2>(0, 0), 1.0);
    const auto domains = static_domain_curve<2>(omega, {-0.25, 1.25});
    TimeIntegrand<2> f{[](double t, const Vec<2>&) { return t; }, [](double, const Vec<2>&) { return 1.0; }};
    const auto r = reynolds_check(f, domains, 0.5, 1e-3);
    EXPECT_NEAR(r.lhs, pi, 1e-8);
    EXPECT_NEAR(r.rhs, pi, 1e-10);
}

TEST(Reynolds, DilatingAreaGrowth) {
    const auto domains = dilation_domain_curve<2>(1.0);
    TimeIntegrand<2> f{[](double, const Vec<2>&) { return 1.0; }, [](double, const Vec<2>&) { return 0.0; }};
    const double t = 0.5, R = 1.5;
    const auto r = reynolds_check(f, domains, t, 1e-3);
    EXPECT_NEAR(r.rhs, 2 * pi * R, 1e-9);
    EXPECT_NEAR(r.lhs, 2 * pi * R, 1e-6);
}

TEST(Reynolds, SecondOrderInEps) {
    const auto domains = dilation_domain_curve<2>(1.0);
    TimeIntegrand<2> f{[](double t, const Vec<2>& y) { return std::exp(-t * y.squaredNorm()) * (1 + y[0]); },
                       [](double t, const Vec<2>& y) {
                           return -y.squaredNorm() * std::exp(-t * y.squaredNorm()) * (1 + y[0]);
                       }};
    std::vector<double> res;
    for (double eps : {2e-2, 1e-2, 5e-3}) res.push_back(reynolds_check(f, domains, 0.5, eps).residual);
    EXPECT_GE(std::log2(res[0] / res[2]) / 2.0, 1.9);
}

TEST(Reynolds, RejectsEpsOutsideInterval) {
    const auto domains = dilation_domain_curve<2>(1.0);
    EXPECT_THROW(reynolds_check(density_integrand(uniform_dilation_curve<2>(1.0)), domains, 1.2, 0.1),
                 InvalidArgument);
}

TEST(BoundaryImage, CrossingImageIsRejected) {
    const auto s = identity(32);
    VectorField<2> flipped = s.sol.grad_phi;
    const int ni = s.mesh->n_interior();
    std::swap(flipped.values[ni + 2], flipped.values[ni + 9]);
    EXPECT_THROW(image_arc_weights<2>(*s.mesh, 0.0, s.p, flipped), GeometryError);
}

TEST(OneDimensional, SensitivityMatchesOracle) {
    const auto omega = make_ball_domain<1>(Vec<1>::Constant(0.5), 0.5);
    const auto mesh = build_mesh<1>(omega, 256);
    const auto q = uniform_reference<1>(omega);
    const auto p = exponential_tilt_curve(static_domain_curve<1>(omega, {-0.25, 1.25}), 1.0);
    TransportOracle1D oracle(p, q);
    const auto sol = solve_monge_ampere<1>(0.5, q, p, mesh);
    const auto lin = sensitivity(sol, q, p);
    double err = 0.0;
    for (int i = 0; i < mesh->size(); ++i) {
        err = std::max(err, std::abs(lin.grad_xi[i][0] - oracle.map_rate(0.5, mesh->node(i)[0])));
    }
    EXPECT_LT(err, 1e-4);
}
