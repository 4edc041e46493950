#pragma once

#include "masense/geometry.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace masense {

using SparseOp = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class NodeKind { Interior, Boundary };

/// Point cloud on Omega: Cartesian lattice nodes clipped to {h < 0} (interior),
/// followed by exact boundary nodes from a boundary trace. Nodes are indexed
/// interior first; boundary node k has index n_interior() + k.
///
/// Derivative operators are precomputed row-stencils over all nodes:
/// second-order central differences where the full lattice neighbourhood is
/// present, weighted least-squares cubic fits elsewhere (clipped interior
/// stencils and one-sided boundary stencils). Both are exact on quadratics.
template <int Dim>
class Mesh {
public:
    static std::shared_ptr<const Mesh> build(const ConvexDomain<Dim>& domain, int resolution);

    int size() const { return static_cast<int>(nodes_.size()); }
    int n_interior() const { return n_interior_; }
    int n_boundary() const { return size() - n_interior_; }
    bool is_boundary(int i) const { return i >= n_interior_; }
    NodeKind kind(int i) const { return is_boundary(i) ? NodeKind::Boundary : NodeKind::Interior; }

    const Vec<Dim>& node(int i) const { return nodes_[i]; }
    const std::vector<Vec<Dim>>& nodes() const { return nodes_; }
    const BoundaryTrace<Dim>& trace() const { return trace_; }
    const ConvexDomain<Dim>& domain() const { return domain_; }
    double spacing() const { return spacing_; }
    int resolution() const { return resolution_; }

    /// Quadrature weights for \int_Omega over interior nodes.
    std::span<const double> interior_weights() const { return interior_weights_; }

    const SparseOp& gradient_op(int axis) const { return gradient_ops_[axis]; }
    const SparseOp& hessian_op(int a, int b) const { return hessian_ops_[pair_index(a, b)]; }

    /// Whether node i uses the central lattice stencil.
    bool has_central_stencil(int i) const { return central_[i]; }

    int nearest_node(const Vec<Dim>& x) const;

    /// Sub-cell sample points covering Omega (k^Dim per lattice cell, kept when
    /// inside), with their area weights.
    struct Sample {
        Vec<Dim> point;
        double weight;
    };
    std::vector<Sample> fine_samples(int k) const;

    static constexpr int pair_index(int a, int b) {
        if (a > b) std::swap(a, b);
        return Dim == 1 ? 0 : (a == 0 ? b : 2);
    }

private:
    explicit Mesh(const ConvexDomain<Dim>& domain) : domain_(domain) {}

    Eigen::Matrix<long, Dim, 1> lattice_index(const Vec<Dim>& x) const;
    long flatten(const Eigen::Matrix<long, Dim, 1>& k) const;
    Vec<Dim> lattice_point(const Eigen::Matrix<long, Dim, 1>& k) const;
    std::vector<int> neighbours_within(const Vec<Dim>& x, double radius) const;
    void build_stencils();

    ConvexDomain<Dim> domain_;
    int resolution_ = 0;
    double spacing_ = 0.0;
    Vec<Dim> origin_;
    Eigen::Matrix<long, Dim, 1> lo_;
    Eigen::Matrix<long, Dim, 1> dims_;
    std::vector<Vec<Dim>> nodes_;
    int n_interior_ = 0;
    BoundaryTrace<Dim> trace_;
    std::vector<double> interior_weights_;
    std::vector<int> lattice_owner_;            // flattened lattice index -> node or -1
    std::vector<std::vector<int>> buckets_;     // flattened lattice index -> nodes in cell
    std::vector<bool> central_;
    std::vector<SparseOp> gradient_ops_;
    std::vector<SparseOp> hessian_ops_;
};

template <int Dim>
using MeshPtr = std::shared_ptr<const Mesh<Dim>>;

template <int Dim>
MeshPtr<Dim> build_mesh(const ConvexDomain<Dim>& domain, int resolution) {
    return Mesh<Dim>::build(domain, resolution);
}

/// Scalar values indexed by mesh node.
template <int Dim>
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(MeshPtr<Dim> mesh, Eigen::VectorXd values);
    static ScalarField sample(MeshPtr<Dim> mesh, const std::function<double(const Vec<Dim>&)>& f);
    static ScalarField constant(MeshPtr<Dim> mesh, double c);

    const MeshPtr<Dim>& mesh() const { return mesh_; }
    const Eigen::VectorXd& values() const { return values_; }
    double operator[](int i) const { return values_[i]; }
    int size() const { return static_cast<int>(values_.size()); }

private:
    MeshPtr<Dim> mesh_;
    Eigen::VectorXd values_;
};

template <int Dim>
struct VectorField {
    MeshPtr<Dim> mesh;
    std::vector<Vec<Dim>> values;

    const Vec<Dim>& operator[](int i) const { return values[i]; }
};

template <int Dim>
struct MatrixField {
    MeshPtr<Dim> mesh;
    std::vector<Mat<Dim>> values;

    const Mat<Dim>& operator[](int i) const { return values[i]; }
};

template <int Dim>
VectorField<Dim> gradient(const ScalarField<Dim>& field);

template <int Dim>
MatrixField<Dim> hessian(const ScalarField<Dim>& field);

/// \sum_i w_i rho(x_i) f_i over interior nodes (rho = 1 when empty).
template <int Dim>
double integrate_interior(const ScalarField<Dim>& field,
                          const std::function<double(const Vec<Dim>&)>& weight_density = {});

/// \sum_k w_k v_k.
double integrate_boundary(std::span<const double> trace_values, std::span<const double> weights);

/// First-order Taylor reconstruction of a gradient field at an arbitrary point
/// from the nearest node: g_i + H_i (u - x_i).
template <int Dim>
Vec<Dim> interpolate_gradient(const VectorField<Dim>& grad, const MatrixField<Dim>& hess,
                              const Vec<Dim>& u);

}  // namespace masense
