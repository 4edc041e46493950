#pragma once

#include "masense/quadrature.hpp"
#include "masense/solver.hpp"

#include <Eigen/Dense>

#include <functional>

namespace masense {

/// Right-hand side (f on interior nodes, g on boundary nodes) with its
/// compatibility residual \int_Omega q f - \int_{\partial Omega_t} p_t g(grad phi*).
struct LinearizedRHS {
    Eigen::VectorXd f;
    Eigen::VectorXd g;
    double compat_residual = 0.0;

    double scale() const {
        return f.lpNorm<Eigen::Infinity>() + g.lpNorm<Eigen::Infinity>() + 1.0;
    }
};

template <int Dim>
struct LinearizedSolution {
    ScalarField<Dim> xi;
    VectorField<Dim> grad_xi;
    double compat_residual = 0.0;
    /// |f|_inf + |g|_inf + 1 of the right-hand side.
    double rhs_scale = 1.0;
    /// Discrete \int_{\partial Omega_t} p_t xi(grad phi*).
    double constraint_residual = 0.0;
    /// Fredholm multiplier of the compatibility-projected system.
    double fredholm_multiplier = 0.0;
    /// Multiplier of the raw bordered system: the discrete operator's own
    /// O(h^2) departure from the compatibility functional.
    double discretization_defect = 0.0;
    /// sup-norm of P(L xi, B xi) - P(f, g) with P the compatibility projection.
    double linear_residual = 0.0;
};

struct OperatorValues {
    Eigen::VectorXd interior;
    Eigen::VectorXd boundary;
};

template <int Dim>
OperatorValues apply_linearized_operator(const PotentialSolution<Dim>& sol,
                                         const DensityCurve<Dim>& p, const ScalarField<Dim>& xi);

/// \int_{\partial Omega_t} p_t g(grad phi*) from values g(grad phi(x_b)) at the
/// boundary nodes of Omega.
template <int Dim>
double boundary_image_integral(const PotentialSolution<Dim>& sol, const Eigen::VectorXd& values);

template <int Dim>
double check_compatibility(const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                           const PotentialSolution<Dim>& sol, const ReferenceDensity<Dim>& q);

template <int Dim>
LinearizedRHS make_rhs(Eigen::VectorXd f, Eigen::VectorXd g, const PotentialSolution<Dim>& sol,
                       const ReferenceDensity<Dim>& q);

/// Shifts f by a constant so the discrete compatibility residual vanishes.
template <int Dim>
LinearizedRHS project_rhs(const LinearizedRHS& rhs, const PotentialSolution<Dim>& sol,
                          const ReferenceDensity<Dim>& q);

template <int Dim>
LinearizedSolution<Dim> solve_linearized(const PotentialSolution<Dim>& sol,
                                         const ReferenceDensity<Dim>& q, const DensityCurve<Dim>& p,
                                         const LinearizedRHS& rhs, double tol_lin = 1e-10);

/// xi = d/dt phi_t with f = -dt log p_t(grad phi), g = -dt h_t(grad phi).
template <int Dim>
LinearizedSolution<Dim> sensitivity(const PotentialSolution<Dim>& sol,
                                    const ReferenceDensity<Dim>& q, const DensityCurve<Dim>& p);

/// Central difference (phi_{t+eps} - phi_{t-eps}) / (2 eps) of warm-started
/// solves, both normalized with the constraint weights of the central solve.
/// opts.tol_nl is raised to the roundoff floor 4 eps_mach / spacing^2 when below it.
template <int Dim>
ScalarField<Dim> fd_sensitivity_oracle(const PotentialSolution<Dim>& sol,
                                       const ReferenceDensity<Dim>& q, const DensityCurve<Dim>& p,
                                       double eps, SolverOptions opts = {.tol_nl = 1e-12});

/// f_t(y) and its time derivative.
template <int Dim>
struct TimeIntegrand {
    std::function<double(double, const Vec<Dim>&)> value;
    std::function<double(double, const Vec<Dim>&)> dt;
};

template <int Dim>
TimeIntegrand<Dim> density_integrand(const DensityCurve<Dim>& p);

struct ReynoldsResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

/// Compares d/dt \int_{Omega_t} f_t (central difference) with
/// \int_{Omega_t} dt f_t - \int_{\partial Omega_t} f_t dt h_t.
template <int Dim>
ReynoldsResult reynolds_check(const TimeIntegrand<Dim>& f, const DomainCurve<Dim>& domains,
                              double t, double eps);

/// |\int_{Omega_t} dt p_t - \int_{\partial Omega_t} p_t dt h_t|.
template <int Dim>
double density_flux_balance(const DensityCurve<Dim>& p, double t);

}  // namespace masense
