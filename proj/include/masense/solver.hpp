#pragma once

#include "masense/grid.hpp"
#include "masense/models.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace masense {

struct SolverOptions {
    double tol_nl = 1e-9;
    int max_newton = 50;
    double armijo = 1e-4;
    double backtrack = 0.5;
    double min_step = 1e-12;
    /// Shrink factor of the default initial map into Omega_t.
    double init_shrink = 0.9;
    /// Interior node whose value is pinned to zero; -1 picks the node nearest
    /// the domain's witness point.
    int reference_node = -1;
};

/// Converged potential phi_t on the mesh of Omega with diagnostics.
///
/// The discrete system has one more equation than unknowns once the additive
/// constant is pinned, so Newton carries a scalar mass defect lambda on the
/// interior rows: Gamma1(phi) + lambda = 0, Gamma2(phi) = 0. lambda vanishes
/// as the mesh is refined. residual_interior is sup |Gamma1 + lambda|.
template <int Dim>
struct PotentialSolution {
    double t = 0.0;
    ScalarField<Dim> phi;
    VectorField<Dim> grad_phi;
    MatrixField<Dim> hess_phi;
    double residual_interior = 0.0;
    double residual_boundary = 0.0;
    double mass_defect = 0.0;
    double beta = 0.0;
    double rho = 0.0;
    double rho_floor = 0.0;
    int newton_iters = 0;
    std::vector<double> residual_history;
    /// p_t(grad phi(x_b)) times the arclength weight of the boundary image,
    /// one entry per boundary node; discretizes \int_{\partial Omega_t} p_t (.)(grad phi*).
    Eigen::VectorXd constraint_weights;

    const MeshPtr<Dim>& mesh() const { return phi.mesh(); }
};

struct GammaResidual {
    Eigen::VectorXd interior;
    Eigen::VectorXd boundary;
};

/// Gamma at interior nodes (log det D^2 phi - log q + log p_t(grad phi)) and
/// h_t(grad phi) at boundary nodes.
template <int Dim>
GammaResidual assemble_gamma(double t, const ScalarField<Dim>& phi, const ReferenceDensity<Dim>& q,
                             const DensityCurve<Dim>& p);

/// Default starting potential: grad phi_0(x) = c_t + s (x - c), a shrunk
/// copy of Omega inside Omega_t.
template <int Dim>
ScalarField<Dim> initial_potential(double t, const DensityCurve<Dim>& p, MeshPtr<Dim> mesh,
                                   double shrink = 0.9);

template <int Dim>
PotentialSolution<Dim> solve_monge_ampere(double t, const ReferenceDensity<Dim>& q,
                                          const DensityCurve<Dim>& p, MeshPtr<Dim> mesh,
                                          const std::optional<ScalarField<Dim>>& init = std::nullopt,
                                          const SolverOptions& opts = {});

/// Arclength weights of the boundary image y_b = grad phi(x_b) on
/// \partial Omega_t. Throws GeometryError when the image is not traversed
/// monotonically (crossing chords).
template <int Dim>
Eigen::VectorXd image_arc_weights(const Mesh<Dim>& mesh, double t, const DensityCurve<Dim>& p,
                                  const VectorField<Dim>& grad);

struct Obliqueness {
    double rho = 0.0;
    /// beta^{-2} min |grad h_t(grad phi)|.
    double floor = 0.0;
};

template <int Dim>
Obliqueness diagnostics_obliqueness(const PotentialSolution<Dim>& sol, const DensityCurve<Dim>& p);

/// Largest of lambda_max and 1/lambda_min of D^2 phi over all nodes.
template <int Dim>
double hessian_bound(const MatrixField<Dim>& hess);

/// Max over a cells^Dim partition of the bounding box of Omega_t of
/// |Q(grad phi in A) - P_t(A)|.
template <int Dim>
double pushforward_check(const PotentialSolution<Dim>& sol, const ReferenceDensity<Dim>& q,
                         const DensityCurve<Dim>& p, int cells = 4);

/// min <grad phi(x) - grad phi(x'), x - x'> over random node pairs.
template <int Dim>
double monotonicity_check(const PotentialSolution<Dim>& sol, int pairs = 10000,
                          std::uint64_t seed = 20240611);

}  // namespace masense
