#include "masense/grid.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace masense {
namespace {

template <int Dim>
using Index = Eigen::Matrix<long, Dim, 1>;

// Monomial exponents of total degree <= 3.
template <int Dim>
std::vector<std::array<int, Dim>> cubic_exponents() {
    std::vector<std::array<int, Dim>> out;
    if constexpr (Dim == 1) {
        for (int a = 0; a <= 3; ++a) out.push_back({a});
    } else {
        for (int deg = 0; deg <= 3; ++deg) {
            for (int a = deg; a >= 0; --a) out.push_back({a, deg - a});
        }
    }
    return out;
}

template <int Dim>
int find_exponent(const std::vector<std::array<int, Dim>>& exps, const std::array<int, Dim>& e) {
    for (std::size_t k = 0; k < exps.size(); ++k) {
        if (exps[k] == e) return static_cast<int>(k);
    }
    return -1;
}

template <int Dim>
void for_each_offset(const std::function<void(const Index<Dim>&)>& f) {
    if constexpr (Dim == 1) {
        for (long a = -1; a <= 1; ++a) f(Index<1>::Constant(a));
    } else {
        for (long a = -1; a <= 1; ++a)
            for (long b = -1; b <= 1; ++b) f(Index<2>(a, b));
    }
}

}  // namespace

template <int Dim>
Index<Dim> Mesh<Dim>::lattice_index(const Vec<Dim>& x) const {
    Index<Dim> k;
    for (int d = 0; d < Dim; ++d) {
        k[d] = std::lround((x[d] - origin_[d]) / spacing_);
    }
    return k;
}

template <int Dim>
long Mesh<Dim>::flatten(const Index<Dim>& k) const {
    long flat = 0;
    for (int d = Dim - 1; d >= 0; --d) {
        const long local = k[d] - lo_[d];
        if (local < 0 || local >= dims_[d]) return -1;
        flat = flat * dims_[d] + local;
    }
    return flat;
}

template <int Dim>
Vec<Dim> Mesh<Dim>::lattice_point(const Index<Dim>& k) const {
    return origin_ + spacing_ * k.template cast<double>();
}

template <int Dim>
std::vector<int> Mesh<Dim>::neighbours_within(const Vec<Dim>& x, double radius) const {
    std::vector<int> out;
    const Index<Dim> c = lattice_index(x);
    const long reach = static_cast<long>(std::ceil(radius / spacing_)) + 1;
    Index<Dim> k;
    auto visit = [&](const Index<Dim>& idx) {
        const long flat = flatten(idx);
        if (flat < 0) return;
        for (int j : buckets_[flat]) {
            if ((nodes_[j] - x).norm() <= radius) out.push_back(j);
        }
    };
    if constexpr (Dim == 1) {
        for (long a = -reach; a <= reach; ++a) visit(Index<1>::Constant(c[0] + a));
    } else {
        for (long a = -reach; a <= reach; ++a)
            for (long b = -reach; b <= reach; ++b) visit(Index<2>(c[0] + a, c[1] + b));
    }
    std::sort(out.begin(), out.end());
    return out;
}

template <int Dim>
int Mesh<Dim>::nearest_node(const Vec<Dim>& x) const {
    for (double radius = 1.5 * spacing_;; radius *= 2.0) {
        const auto cand = neighbours_within(x, radius);
        if (!cand.empty()) {
            return *std::min_element(cand.begin(), cand.end(), [&](int a, int b) {
                return (nodes_[a] - x).squaredNorm() < (nodes_[b] - x).squaredNorm();
            });
        }
        if (radius > 4.0 * spacing_ * dims_.maxCoeff()) {
            throw MeshError("nearest node: query point far outside the mesh");
        }
    }
}

template <int Dim>
std::shared_ptr<const Mesh<Dim>> Mesh<Dim>::build(const ConvexDomain<Dim>& domain, int resolution) {
    if (resolution < 16) {
        throw InvalidArgument("mesh: resolution must be at least 16");
    }
    std::shared_ptr<Mesh> mesh(new Mesh(domain));
    Mesh& m = *mesh;
    m.resolution_ = resolution;
    const Box<Dim> box = domain.bounding_box();
    m.spacing_ = box.extent().maxCoeff() / resolution;
    m.origin_ = domain.witness();
    const double s = m.spacing_;
    for (int d = 0; d < Dim; ++d) {
        m.lo_[d] = static_cast<long>(std::floor((box.lo[d] - m.origin_[d]) / s)) - 2;
        const long hi = static_cast<long>(std::ceil((box.hi[d] - m.origin_[d]) / s)) + 2;
        m.dims_[d] = hi - m.lo_[d] + 1;
    }
    const long cells = m.dims_.prod();
    m.lattice_owner_.assign(cells, -1);
    m.buckets_.assign(cells, {});

    auto index_of = [&](long flat) {
        Index<Dim> k;
        for (int d = 0; d < Dim; ++d) {
            k[d] = m.lo_[d] + flat % m.dims_[d];
            flat /= m.dims_[d];
        }
        return k;
    };

    // Interior lattice nodes; those closer than half a spacing to the
    // boundary are left to the boundary nodes.
    for (long flat = 0; flat < cells; ++flat) {
        const Vec<Dim> x = m.lattice_point(index_of(flat));
        if (domain.h(x) < 0.0 && domain.distance_estimate(x) >= 0.5 * s) {
            m.lattice_owner_[flat] = static_cast<int>(m.nodes_.size());
            m.nodes_.push_back(x);
        }
    }
    m.n_interior_ = static_cast<int>(m.nodes_.size());
    if (m.n_interior_ == 0) {
        throw MeshError("mesh: resolution too coarse, no interior node");
    }

    const int n_trace =
        Dim == 1 ? 2 : std::max(8, static_cast<int>(std::ceil(perimeter<Dim>(domain) / s)));
    m.trace_ = boundary_trace<Dim>(domain, n_trace);
    for (const auto& y : m.trace_.points) {
        const int idx = static_cast<int>(m.nodes_.size());
        m.nodes_.push_back(y);
        const Index<Dim> k = m.lattice_index(y);
        const long flat = m.flatten(k);
        if (flat >= 0 && m.lattice_owner_[flat] < 0 && (m.lattice_point(k) - y).norm() < 1e-9 * s) {
            m.lattice_owner_[flat] = idx;
        }
    }
    for (int i = 0; i < m.size(); ++i) {
        const long flat = m.flatten(m.lattice_index(m.nodes_[i]));
        if (flat < 0) throw MeshError("mesh: node outside lattice range");
        m.buckets_[flat].push_back(i);
    }

    // Cell quadrature: full cells count whole, cut cells by 4^Dim sub-sampling
    // of the sign of h. Area of cells without an interior owner goes to the
    // nearest interior node.
    m.interior_weights_.assign(m.n_interior_, 0.0);
    const double cell_volume = std::pow(s, Dim);
    for (long flat = 0; flat < cells; ++flat) {
        const Vec<Dim> x = m.lattice_point(index_of(flat));
        int owner = m.lattice_owner_[flat];
        double fraction = 0.0;
        if (owner >= 0 && owner < m.n_interior_ && domain.distance_estimate(x) > s) {
            fraction = 1.0;
        } else {
            constexpr int sub = 4;
            int inside = 0;
            int total = 0;
            if constexpr (Dim == 1) {
                for (int a = 0; a < sub; ++a, ++total) {
                    const Vec<1> y = x + Vec<1>::Constant(s * ((a + 0.5) / sub - 0.5));
                    inside += domain.h(y) < 0.0;
                }
            } else {
                for (int a = 0; a < sub; ++a)
                    for (int b = 0; b < sub; ++b, ++total) {
                        const Vec<2> y =
                            x + s * Vec<2>((a + 0.5) / sub - 0.5, (b + 0.5) / sub - 0.5);
                        inside += domain.h(y) < 0.0;
                    }
            }
            fraction = static_cast<double>(inside) / total;
        }
        if (fraction <= 0.0) continue;
        if (owner < 0 || owner >= m.n_interior_) {
            owner = -1;
            double best = std::numeric_limits<double>::infinity();
            for (double radius = 1.5 * s; owner < 0; radius += s) {
                for (int j : m.neighbours_within(x, radius)) {
                    if (j >= m.n_interior_) continue;
                    const double d = (m.nodes_[j] - x).squaredNorm();
                    if (d < best) {
                        best = d;
                        owner = j;
                    }
                }
                if (radius > 10.0 * s && owner < 0) {
                    throw MeshError("mesh: cut cell without nearby interior node");
                }
            }
        }
        m.interior_weights_[owner] += fraction * cell_volume;
    }

    m.build_stencils();
    return mesh;
}

template <int Dim>
void Mesh<Dim>::build_stencils() {
    const int n = size();
    const double s = spacing_;
    constexpr int n_pairs = Dim * (Dim + 1) / 2;
    std::vector<std::vector<Eigen::Triplet<double>>> grad_t(Dim), hess_t(n_pairs);
    central_.assign(n, false);

    const auto exps = cubic_exponents<Dim>();
    const int n_coef = static_cast<int>(exps.size());
    std::array<int, Dim> grad_row{};
    std::array<int, n_pairs> hess_row{};
    std::array<double, n_pairs> hess_scale{};
    for (int d = 0; d < Dim; ++d) {
        std::array<int, Dim> e{};
        e[d] = 1;
        grad_row[d] = find_exponent<Dim>(exps, e);
    }
    for (int a = 0; a < Dim; ++a) {
        for (int b = a; b < Dim; ++b) {
            std::array<int, Dim> e{};
            e[a] += 1;
            e[b] += 1;
            hess_row[pair_index(a, b)] = find_exponent<Dim>(exps, e);
            hess_scale[pair_index(a, b)] = a == b ? 2.0 : 1.0;
        }
    }

    for (int i = 0; i < n; ++i) {
        const Vec<Dim> x0 = nodes_[i];

        if (i < n_interior_) {
            const Index<Dim> k = lattice_index(x0);
            bool full = true;
            for_each_offset<Dim>([&](const Index<Dim>& o) {
                const long flat = flatten(k + o);
                if (flat < 0 || lattice_owner_[flat] < 0) full = false;
            });
            if (full) {
                central_[i] = true;
                auto at = [&](const Index<Dim>& o) { return lattice_owner_[flatten(k + o)]; };
                for (int d = 0; d < Dim; ++d) {
                    Index<Dim> e = Index<Dim>::Zero();
                    e[d] = 1;
                    grad_t[d].emplace_back(i, at(e), 0.5 / s);
                    grad_t[d].emplace_back(i, at(-e), -0.5 / s);
                    auto& hd = hess_t[pair_index(d, d)];
                    hd.emplace_back(i, at(e), 1.0 / (s * s));
                    hd.emplace_back(i, i, -2.0 / (s * s));
                    hd.emplace_back(i, at(-e), 1.0 / (s * s));
                }
                if constexpr (Dim == 2) {
                    auto& hx = hess_t[pair_index(0, 1)];
                    const double c = 0.25 / (s * s);
                    hx.emplace_back(i, at(Index<2>(1, 1)), c);
                    hx.emplace_back(i, at(Index<2>(1, -1)), -c);
                    hx.emplace_back(i, at(Index<2>(-1, 1)), -c);
                    hx.emplace_back(i, at(Index<2>(-1, -1)), c);
                }
                continue;
            }
        }

        // Weighted least-squares cubic fit in scaled coordinates.
        double radius = (Dim == 1 ? 3.5 : (i < n_interior_ ? 2.5 : 3.0)) * s;
        const double width = 1.5 * s;
        bool done = false;
        for (int attempt = 0; attempt < 8 && !done; ++attempt, radius += 0.5 * s) {
            const auto nb = neighbours_within(x0, radius);
            const int m = static_cast<int>(nb.size());
            if (2 * m < 3 * n_coef) continue;
            Eigen::MatrixXd P(m, n_coef);
            Eigen::VectorXd sw(m);
            for (int r = 0; r < m; ++r) {
                const Vec<Dim> z = (nodes_[nb[r]] - x0) / s;
                sw[r] = std::exp(-0.25 * (nodes_[nb[r]] - x0).squaredNorm() / (width * width));
                for (int c = 0; c < n_coef; ++c) {
                    double v = 1.0;
                    for (int d = 0; d < Dim; ++d) v *= std::pow(z[d], exps[c][d]);
                    P(r, c) = sw[r] * v;
                }
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto& sv = svd.singularValues();
            if (sv[n_coef - 1] < 1e-4 * sv[0]) continue;
            // C = V S^{-1} U^T diag(sw): coefficients as linear maps of node values.
            Eigen::MatrixXd C = svd.matrixV() * sv.cwiseInverse().asDiagonal() *
                                svd.matrixU().transpose() * sw.asDiagonal();
            for (int r = 0; r < m; ++r) {
                for (int d = 0; d < Dim; ++d) {
                    grad_t[d].emplace_back(i, nb[r], C(grad_row[d], r) / s);
                }
                for (int p = 0; p < n_pairs; ++p) {
                    hess_t[p].emplace_back(i, nb[r], hess_scale[p] * C(hess_row[p], r) / (s * s));
                }
            }
            done = true;
        }
        if (!done) {
            throw MeshError("mesh: could not build a well-conditioned stencil");
        }
    }

    gradient_ops_.assign(Dim, SparseOp(n, n));
    hessian_ops_.assign(n_pairs, SparseOp(n, n));
    for (int d = 0; d < Dim; ++d) gradient_ops_[d].setFromTriplets(grad_t[d].begin(), grad_t[d].end());
    for (int p = 0; p < n_pairs; ++p)
        hessian_ops_[p].setFromTriplets(hess_t[p].begin(), hess_t[p].end());
}

template <int Dim>
std::vector<typename Mesh<Dim>::Sample> Mesh<Dim>::fine_samples(int k) const {
    std::vector<Sample> out;
    const double s = spacing_;
    const double w = std::pow(s / k, Dim);
    const long cells = dims_.prod();
    for (long flat = 0; flat < cells; ++flat) {
        Index<Dim> idx;
        long rest = flat;
        for (int d = 0; d < Dim; ++d) {
            idx[d] = lo_[d] + rest % dims_[d];
            rest /= dims_[d];
        }
        const Vec<Dim> x = lattice_point(idx);
        if (domain_.h(x) > 2.0 * s * (1.0 + domain_.kappa())) continue;
        if constexpr (Dim == 1) {
            for (int a = 0; a < k; ++a) {
                const Vec<1> y = x + Vec<1>::Constant(s * ((a + 0.5) / k - 0.5));
                if (domain_.h(y) < 0.0) out.push_back({y, w});
            }
        } else {
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) {
                    const Vec<2> y = x + s * Vec<2>((a + 0.5) / k - 0.5, (b + 0.5) / k - 0.5);
                    if (domain_.h(y) < 0.0) out.push_back({y, w});
                }
        }
    }
    return out;
}

template <int Dim>
ScalarField<Dim>::ScalarField(MeshPtr<Dim> mesh, Eigen::VectorXd values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (!mesh_ || values_.size() != mesh_->size()) {
        throw InvalidArgument("scalar field: length does not match node count");
    }
    if (!values_.allFinite()) {
        throw InvalidArgument("scalar field: non-finite values");
    }
}

template <int Dim>
ScalarField<Dim> ScalarField<Dim>::sample(MeshPtr<Dim> mesh,
                                          const std::function<double(const Vec<Dim>&)>& f) {
    Eigen::VectorXd v(mesh->size());
    for (int i = 0; i < mesh->size(); ++i) v[i] = f(mesh->node(i));
    return ScalarField(std::move(mesh), std::move(v));
}

template <int Dim>
ScalarField<Dim> ScalarField<Dim>::constant(MeshPtr<Dim> mesh, double c) {
    const int n = mesh->size();
    return ScalarField(std::move(mesh), Eigen::VectorXd::Constant(n, c));
}

template <int Dim>
VectorField<Dim> gradient(const ScalarField<Dim>& field) {
    const auto& mesh = *field.mesh();
    VectorField<Dim> out{field.mesh(), std::vector<Vec<Dim>>(mesh.size())};
    for (int d = 0; d < Dim; ++d) {
        const Eigen::VectorXd g = mesh.gradient_op(d) * field.values();
        for (int i = 0; i < mesh.size(); ++i) out.values[i][d] = g[i];
    }
    return out;
}

template <int Dim>
MatrixField<Dim> hessian(const ScalarField<Dim>& field) {
    const auto& mesh = *field.mesh();
    MatrixField<Dim> out{field.mesh(), std::vector<Mat<Dim>>(mesh.size())};
    for (int a = 0; a < Dim; ++a) {
        for (int b = a; b < Dim; ++b) {
            const Eigen::VectorXd h = mesh.hessian_op(a, b) * field.values();
            for (int i = 0; i < mesh.size(); ++i) {
                out.values[i](a, b) = h[i];
                out.values[i](b, a) = h[i];
            }
        }
    }
    return out;
}

template <int Dim>
double integrate_interior(const ScalarField<Dim>& field,
                          const std::function<double(const Vec<Dim>&)>& weight_density) {
    const auto& mesh = *field.mesh();
    const auto w = mesh.interior_weights();
    double total = 0.0;
    for (int i = 0; i < mesh.n_interior(); ++i) {
        const double rho = weight_density ? weight_density(mesh.node(i)) : 1.0;
        total += w[i] * rho * field[i];
    }
    return total;
}

double integrate_boundary(std::span<const double> trace_values, std::span<const double> weights) {
    if (trace_values.size() != weights.size()) {
        throw InvalidArgument("boundary integral: value and weight counts differ");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) total += trace_values[k] * weights[k];
    return total;
}

template <int Dim>
Vec<Dim> interpolate_gradient(const VectorField<Dim>& grad, const MatrixField<Dim>& hess,
                              const Vec<Dim>& u) {
    const int i = grad.mesh->nearest_node(u);
    return grad[i] + hess[i] * (u - grad.mesh->node(i));
}

template class Mesh<1>;
template class Mesh<2>;
template class ScalarField<1>;
template class ScalarField<2>;
template VectorField<1> gradient<1>(const ScalarField<1>&);
template VectorField<2> gradient<2>(const ScalarField<2>&);
template MatrixField<1> hessian<1>(const ScalarField<1>&);
template MatrixField<2> hessian<2>(const ScalarField<2>&);
template double integrate_interior<1>(const ScalarField<1>&,
                                      const std::function<double(const Vec<1>&)>&);
template double integrate_interior<2>(const ScalarField<2>&,
                                      const std::function<double(const Vec<2>&)>&);
template Vec<1> interpolate_gradient<1>(const VectorField<1>&, const MatrixField<1>&,
                                        const Vec<1>&);
template Vec<2> interpolate_gradient<2>(const VectorField<2>&, const MatrixField<2>&,
                                        const Vec<2>&);

}  // namespace masense
