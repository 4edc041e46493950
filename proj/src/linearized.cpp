#include "masense/linearized.hpp"

#include "masense/linearized_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace masense {
namespace {

template <int Dim>
void require_same_mesh(const PotentialSolution<Dim>& sol, const MeshPtr<Dim>& mesh) {
    if (sol.mesh() != mesh) throw InvalidArgument("field lives on a different mesh");
}

// Interior quadrature weights times q: the discrete \int_Omega q (.).
template <int Dim>
Eigen::VectorXd source_mass(const Mesh<Dim>& mesh, const ReferenceDensity<Dim>& q) {
    Eigen::VectorXd m(mesh.n_interior());
    const auto w = mesh.interior_weights();
    for (int i = 0; i < mesh.n_interior(); ++i) m[i] = w[i] * q.q(mesh.node(i));
    return m;
}

}  // namespace

template <int Dim>
OperatorValues apply_linearized_operator(const PotentialSolution<Dim>& sol,
                                         const DensityCurve<Dim>& p, const ScalarField<Dim>& xi) {
    require_same_mesh(sol, xi.mesh());
    const auto& mesh = *sol.mesh();
    const Eigen::VectorXd v =
        linearized_matrix<Dim>(mesh, sol.t, p, sol.grad_phi, sol.hess_phi) * xi.values();
    return {v.head(mesh.n_interior()), v.tail(mesh.n_boundary())};
}

template <int Dim>
double boundary_image_integral(const PotentialSolution<Dim>& sol, const Eigen::VectorXd& values) {
    if (values.size() != sol.constraint_weights.size()) {
        throw InvalidArgument("boundary image integral: one value per boundary node expected");
    }
    return sol.constraint_weights.dot(values);
}

template <int Dim>
double check_compatibility(const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                           const PotentialSolution<Dim>& sol, const ReferenceDensity<Dim>& q) {
    const auto& mesh = *sol.mesh();
    if (f.size() != mesh.n_interior() || g.size() != mesh.n_boundary()) {
        throw InvalidArgument("rhs: sizes do not match the mesh");
    }
    return source_mass(mesh, q).dot(f) - boundary_image_integral(sol, g);
}

template <int Dim>
LinearizedRHS make_rhs(Eigen::VectorXd f, Eigen::VectorXd g, const PotentialSolution<Dim>& sol,
                       const ReferenceDensity<Dim>& q) {
    const double c = check_compatibility(f, g, sol, q);
    return {std::move(f), std::move(g), c};
}

template <int Dim>
LinearizedRHS project_rhs(const LinearizedRHS& rhs, const PotentialSolution<Dim>& sol,
                          const ReferenceDensity<Dim>& q) {
    const double mass = source_mass(*sol.mesh(), q).sum();
    const double c = check_compatibility(rhs.f, rhs.g, sol, q);
    Eigen::VectorXd f = rhs.f.array() - c / mass;
    return make_rhs(std::move(f), rhs.g, sol, q);
}

template <int Dim>
LinearizedSolution<Dim> solve_linearized(const PotentialSolution<Dim>& sol,
                                         const ReferenceDensity<Dim>& q, const DensityCurve<Dim>& p,
                                         const LinearizedRHS& rhs, double tol_lin) {
    const auto& mesh = *sol.mesh();
    const int n = mesh.size();
    const int ni = mesh.n_interior();
    const double compat = check_compatibility(rhs.f, rhs.g, sol, q);
    if (std::abs(compat) > 1e-8 * rhs.scale()) {
        throw CompatibilityError("incompatible right-hand side: residual " + std::to_string(compat));
    }

    const SparseOp J = linearized_matrix<Dim>(mesh, sol.t, p, sol.grad_phi, sol.hess_phi);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b.head(ni).setOnes();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c.tail(n - ni) = sol.constraint_weights;
    Eigen::VectorXd F(n);
    F << rhs.f, rhs.g;

    const BorderedSolution bs = solve_bordered(J, b, c, F);

    // Compatibility functional m: (q w) on interior rows, -c on boundary rows.
    Eigen::VectorXd m(n);
    m << source_mass(mesh, q), -sol.constraint_weights;
    const double mb = m.dot(b);
    const Eigen::VectorXd Jxi = J * bs.x;
    Eigen::VectorXd r = Jxi - F;
    r -= b * (m.dot(r) / mb);

    LinearizedSolution<Dim> out;
    out.xi = ScalarField<Dim>(sol.mesh(), bs.x);
    out.grad_xi = gradient(out.xi);
    out.compat_residual = compat;
    out.rhs_scale = rhs.scale();
    out.constraint_residual = sol.constraint_weights.dot(bs.x.tail(n - ni));
    out.discretization_defect = bs.multiplier;
    out.fredholm_multiplier = bs.multiplier + m.dot(Jxi) / mb;
    out.linear_residual = r.lpNorm<Eigen::Infinity>();

    double norm_J = 0.0;
    for (int i = 0; i < n; ++i) norm_J = std::max(norm_J, J.row(i).cwiseAbs().sum());
    const double bound = tol_lin * (norm_J * bs.x.lpNorm<Eigen::Infinity>() + rhs.scale());
    if (!(out.linear_residual <= bound)) {
        throw LinearSolverError("linearized solve residual " + std::to_string(out.linear_residual) +
                                " above tolerance");
    }
    return out;
}

template <int Dim>
LinearizedSolution<Dim> sensitivity(const PotentialSolution<Dim>& sol,
                                    const ReferenceDensity<Dim>& q, const DensityCurve<Dim>& p) {
    const auto& mesh = *sol.mesh();
    const int ni = mesh.n_interior();
    Eigen::VectorXd f(ni), g(mesh.n_boundary());
    for (int i = 0; i < ni; ++i) f[i] = -p.dt_log_p(sol.t, sol.grad_phi[i]);
    for (int k = 0; k < mesh.n_boundary(); ++k) {
        g[k] = -p.support().dt_h(sol.t, sol.grad_phi[ni + k]);
    }
    const LinearizedRHS rhs = project_rhs(make_rhs(std::move(f), std::move(g), sol, q), sol, q);
    return solve_linearized(sol, q, p, rhs);
}

template <int Dim>
ScalarField<Dim> fd_sensitivity_oracle(const PotentialSolution<Dim>& sol,
                                       const ReferenceDensity<Dim>& q, const DensityCurve<Dim>& p,
                                       double eps, SolverOptions opts) {
    if (!(eps > 0.0)) throw InvalidArgument("fd oracle: eps must be positive");
    const Interval I = p.support().param_interval();
    if (!I.contains(sol.t - eps) || !I.contains(sol.t + eps)) {
        throw InvalidArgument("fd oracle: t +- eps outside the parameter interval");
    }
    const auto& mesh = sol.mesh();
    // Second-difference stencils amplify rounding by 1/s^2; a tighter target stalls.
    const double s = mesh->spacing();
    opts.tol_nl = std::max(opts.tol_nl, 4.0 * std::numeric_limits<double>::epsilon() / (s * s));
    const Eigen::VectorXd& c = sol.constraint_weights;
    auto normalized = [&](double s) {
        const auto other = solve_monge_ampere<Dim>(s, q, p, mesh, sol.phi, opts);
        Eigen::VectorXd v = other.phi.values();
        v.array() -= c.dot(v.tail(mesh->n_boundary())) / c.sum();
        return v;
    };
    const Eigen::VectorXd plus = normalized(sol.t + eps);
    const Eigen::VectorXd minus = normalized(sol.t - eps);
    return ScalarField<Dim>(mesh, (plus - minus) / (2.0 * eps));
}

template <int Dim>
TimeIntegrand<Dim> density_integrand(const DensityCurve<Dim>& p) {
    return {[p](double t, const Vec<Dim>& y) { return p.p(t, y); },
            [p](double t, const Vec<Dim>& y) { return p.p(t, y) * p.dt_log_p(t, y); }};
}

template <int Dim>
ReynoldsResult reynolds_check(const TimeIntegrand<Dim>& f, const DomainCurve<Dim>& domains,
                              double t, double eps) {
    const Interval I = domains.param_interval();
    if (!(eps > 0.0) || !I.contains(t - eps) || !I.contains(t + eps)) {
        throw InvalidArgument("reynolds check: t +- eps outside the parameter interval");
    }
    constexpr double tol = 1e-13;
    auto total = [&](double s) {
        return integrate_domain<Dim>(domains.at(s), [&](const Vec<Dim>& y) { return f.value(s, y); },
                                     tol);
    };
    ReynoldsResult out;
    out.lhs = (total(t + eps) - total(t - eps)) / (2.0 * eps);
    out.rhs = integrate_domain<Dim>(domains.at(t), [&](const Vec<Dim>& y) { return f.dt(t, y); }, tol) +
              integrate_boundary_flux<Dim>(domains, t, [&](const Vec<Dim>& y) { return f.value(t, y); },
                                           tol);
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

template <int Dim>
double density_flux_balance(const DensityCurve<Dim>& p, double t) {
    const auto f = density_integrand(p);
    constexpr double tol = 1e-13;
    const double volume =
        integrate_domain<Dim>(p.support_at(t), [&](const Vec<Dim>& y) { return f.dt(t, y); }, tol);
    const double flux = integrate_boundary_flux<Dim>(
        p.support(), t, [&](const Vec<Dim>& y) { return f.value(t, y); }, tol);
    return std::abs(volume + flux);
}

#define MASENSE_INSTANTIATE(D)                                                                     \
    template OperatorValues apply_linearized_operator<D>(                                          \
        const PotentialSolution<D>&, const DensityCurve<D>&, const ScalarField<D>&);               \
    template double boundary_image_integral<D>(const PotentialSolution<D>&,                        \
                                               const Eigen::VectorXd&);                            \
    template double check_compatibility<D>(const Eigen::VectorXd&, const Eigen::VectorXd&,         \
                                           const PotentialSolution<D>&,                            \
                                           const ReferenceDensity<D>&);                            \
    template LinearizedRHS make_rhs<D>(Eigen::VectorXd, Eigen::VectorXd,                           \
                                       const PotentialSolution<D>&, const ReferenceDensity<D>&);   \
    template LinearizedRHS project_rhs<D>(const LinearizedRHS&, const PotentialSolution<D>&,       \
                                          const ReferenceDensity<D>&);                             \
    template LinearizedSolution<D> solve_linearized<D>(                                            \
        const PotentialSolution<D>&, const ReferenceDensity<D>&, const DensityCurve<D>&,           \
        const LinearizedRHS&, double);                                                             \
    template LinearizedSolution<D> sensitivity<D>(                                                 \
        const PotentialSolution<D>&, const ReferenceDensity<D>&, const DensityCurve<D>&);          \
    template ScalarField<D> fd_sensitivity_oracle<D>(const PotentialSolution<D>&,                  \
                                                     const ReferenceDensity<D>&,                   \
                                                     const DensityCurve<D>&, double,               \
                                                     SolverOptions);                               \
    template TimeIntegrand<D> density_integrand<D>(const DensityCurve<D>&);                        \
    template ReynoldsResult reynolds_check<D>(const TimeIntegrand<D>&, const DomainCurve<D>&,      \
                                              double, double);                                     \
    template double density_flux_balance<D>(const DensityCurve<D>&, double);

MASENSE_INSTANTIATE(1)
MASENSE_INSTANTIATE(2)

}  // namespace masense
