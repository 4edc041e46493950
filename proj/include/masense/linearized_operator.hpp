#pragma once

#include "masense/grid.hpp"
#include "masense/models.hpp"

#include <Eigen/Dense>

namespace masense {

/// Matrix of the linearized Monge-Ampere operator at a convex iterate:
/// interior rows tr(H^{-1} D^2 xi) + <grad log p_t(grad phi), grad xi>,
/// boundary rows <grad h_t(grad phi), grad xi>.
template <int Dim>
SparseOp linearized_matrix(const Mesh<Dim>& mesh, double t, const DensityCurve<Dim>& p,
                           const VectorField<Dim>& grad, const MatrixField<Dim>& hess);

/// Solution of the square bordered system [A column; row^T 0] [x; mu] = [rhs; 0].
struct BorderedSolution {
    Eigen::VectorXd x;
    double multiplier = 0.0;
};

BorderedSolution solve_bordered(const SparseOp& A, const Eigen::VectorXd& column,
                                const Eigen::VectorXd& row, const Eigen::VectorXd& rhs);

}  // namespace masense
