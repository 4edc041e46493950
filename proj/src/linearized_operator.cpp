#include "masense/linearized_operator.hpp"

#include <Eigen/SparseLU>

#include <vector>

namespace masense {

template <int Dim>
SparseOp linearized_matrix(const Mesh<Dim>& mesh, double t, const DensityCurve<Dim>& p,
                           const VectorField<Dim>& grad, const MatrixField<Dim>& hess) {
    const int n = mesh.size();
    const auto target = p.support_at(t);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 40);

    auto add_row = [&](const SparseOp& op, int i, double coef) {
        if (coef == 0.0) return;
        for (SparseOp::InnerIterator it(op, i); it; ++it) {
            trip.emplace_back(i, static_cast<int>(it.col()), coef * it.value());
        }
    };

    for (int i = 0; i < mesh.n_interior(); ++i) {
        const Mat<Dim> inv = hess[i].inverse();
        const Vec<Dim> drift = p.grad_log_p(t, grad[i]);
        for (int a = 0; a < Dim; ++a) {
            for (int b = a; b < Dim; ++b) {
                add_row(mesh.hessian_op(a, b), i, a == b ? inv(a, a) : inv(a, b) + inv(b, a));
            }
            add_row(mesh.gradient_op(a), i, drift[a]);
        }
    }
    for (int i = mesh.n_interior(); i < n; ++i) {
        const Vec<Dim> dir = target.grad_h(grad[i]);
        for (int a = 0; a < Dim; ++a) add_row(mesh.gradient_op(a), i, dir[a]);
    }

    SparseOp J(n, n);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

BorderedSolution solve_bordered(const SparseOp& A, const Eigen::VectorXd& column,
                                const Eigen::VectorXd& row, const Eigen::VectorXd& rhs) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || column.size() != n || row.size() != n || rhs.size() != n) {
        throw InvalidArgument("bordered system: dimension mismatch");
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nonZeros() + 2 * n);
    for (int i = 0; i < n; ++i) {
        for (SparseOp::InnerIterator it(A, i); it; ++it) {
            trip.emplace_back(i, static_cast<int>(it.col()), it.value());
        }
        if (column[i] != 0.0) trip.emplace_back(i, n, column[i]);
        if (row[i] != 0.0) trip.emplace_back(n, i, row[i]);
    }
    Eigen::SparseMatrix<double> M(n + 1, n + 1);
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) {
        throw AssemblyError("bordered system is singular: " + lu.lastErrorMessage());
    }
    Eigen::VectorXd b(n + 1);
    b.head(n) = rhs;
    b[n] = 0.0;
    const Eigen::VectorXd sol = lu.solve(b);
    if (lu.info() != Eigen::Success || !sol.allFinite()) {
        throw LinearSolverError("bordered solve failed");
    }
    return {sol.head(n), sol[n]};
}

template SparseOp linearized_matrix<1>(const Mesh<1>&, double, const DensityCurve<1>&,
                                       const VectorField<1>&, const MatrixField<1>&);
template SparseOp linearized_matrix<2>(const Mesh<2>&, double, const DensityCurve<2>&,
                                       const VectorField<2>&, const MatrixField<2>&);

}  // namespace masense
