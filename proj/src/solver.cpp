#include "masense/solver.hpp"

#include "masense/linearized_operator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace masense {
namespace {

template <int Dim>
std::vector<Vec<Dim>> directions(int count) {
    std::vector<Vec<Dim>> out;
    if constexpr (Dim == 1) {
        out = {Vec<1>::Constant(-1.0), Vec<1>::Constant(1.0)};
    } else {
        for (int k = 0; k < count; ++k) {
            const double a = 2.0 * std::numbers::pi * k / count;
            out.emplace_back(std::cos(a), std::sin(a));
        }
    }
    return out;
}

template <int Dim>
Eigen::Matrix<double, Dim, 1> eigenvalues(const Mat<Dim>& H) {
    if constexpr (Dim == 1) {
        return H.diagonal();
    } else {
        Eigen::SelfAdjointEigenSolver<Mat<Dim>> es;
        es.computeDirect(H, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }
}

// Derivatives of phi plus both residual blocks; throws on a non-convex or
// out-of-range iterate.
template <int Dim>
struct Evaluation {
    VectorField<Dim> grad;
    MatrixField<Dim> hess;
    GammaResidual gamma;
};

template <int Dim>
Evaluation<Dim> evaluate(double t, const ScalarField<Dim>& phi, const Eigen::VectorXd& log_q,
                         const DensityCurve<Dim>& p) {
    const auto& mesh = *phi.mesh();
    Evaluation<Dim> ev{gradient(phi), hessian(phi), {}};
    const auto target = p.support_at(t);
    const Box<Dim> range = target.outer_box();
    for (int i = 0; i < mesh.size(); ++i) {
        if (!(eigenvalues<Dim>(ev.hess[i]).minCoeff() > 0.0)) {
            throw ConvexityViolation("Hessian not positive definite at node " + std::to_string(i));
        }
        if (!range.contains(ev.grad[i])) {
            throw RangeViolation("gradient leaves the target range at node " + std::to_string(i));
        }
    }
    ev.gamma.interior.resize(mesh.n_interior());
    for (int i = 0; i < mesh.n_interior(); ++i) {
        ev.gamma.interior[i] =
            std::log(ev.hess[i].determinant()) - log_q[i] + p.log_p(t, ev.grad[i]);
    }
    ev.gamma.boundary.resize(mesh.n_boundary());
    for (int k = 0; k < mesh.n_boundary(); ++k) {
        ev.gamma.boundary[k] = target.h(ev.grad[mesh.n_interior() + k]);
    }
    return ev;
}

template <int Dim>
Eigen::VectorXd log_q_at_interior(const Mesh<Dim>& mesh, const ReferenceDensity<Dim>& q) {
    Eigen::VectorXd out(mesh.n_interior());
    for (int i = 0; i < mesh.n_interior(); ++i) out[i] = q.log_q(mesh.node(i));
    return out;
}

Eigen::VectorXd stack(const GammaResidual& g, double lambda) {
    Eigen::VectorXd F(g.interior.size() + g.boundary.size());
    F.head(g.interior.size()) = g.interior.array() + lambda;
    F.tail(g.boundary.size()) = g.boundary;
    return F;
}

}  // namespace

template <int Dim>
GammaResidual assemble_gamma(double t, const ScalarField<Dim>& phi, const ReferenceDensity<Dim>& q,
                             const DensityCurve<Dim>& p) {
    return evaluate<Dim>(t, phi, log_q_at_interior(*phi.mesh(), q), p).gamma;
}

template <int Dim>
ScalarField<Dim> initial_potential(double t, const DensityCurve<Dim>& p, MeshPtr<Dim> mesh,
                                   double shrink) {
    const auto& source = mesh->domain();
    const auto target = p.support_at(t);
    double r_in = std::numeric_limits<double>::infinity();
    double r_out = 0.0;
    for (const auto& d : directions<Dim>(64)) {
        r_in = std::min(r_in, target.ray_distance(d));
        r_out = std::max(r_out, source.ray_distance(d));
    }
    const double s = shrink * r_in / r_out;
    const Vec<Dim> c = source.witness();
    const Vec<Dim> ct = target.witness();
    return ScalarField<Dim>::sample(std::move(mesh), [&](const Vec<Dim>& x) {
        return ct.dot(x) + 0.5 * s * (x - c).squaredNorm();
    });
}

template <int Dim>
Eigen::VectorXd image_arc_weights(const Mesh<Dim>& mesh, double t, const DensityCurve<Dim>& p,
                                  const VectorField<Dim>& grad) {
    const int nb = mesh.n_boundary();
    const int off = mesh.n_interior();
    Eigen::VectorXd w = Eigen::VectorXd::Ones(nb);
    if constexpr (Dim == 1) {
        if (!(grad[off][0] < grad[off + 1][0])) {
            throw GeometryError("boundary image: endpoints are not ordered");
        }
    } else {
        const auto target = p.support_at(t);
        const Vec<2> c = target.witness();
        std::vector<Vec<2>> normals(nb);
        for (int k = 0; k < nb; ++k) normals[k] = target.grad_h(grad[off + k]).normalized();
        std::vector<double> arcs(nb);
        for (int k = 0; k < nb; ++k) {
            const int j = (k + 1) % nb;
            const Vec<2> a = grad[off + k] - c;
            const Vec<2> b = grad[off + j] - c;
            if (!(a.x() * b.y() - a.y() * b.x() > 0.0)) {
                throw GeometryError("boundary image crosses itself near boundary node " +
                                    std::to_string(off + k));
            }
            arcs[k] = arc_length(grad[off + k], normals[k], grad[off + j], normals[j]);
        }
        for (int k = 0; k < nb; ++k) w[k] = 0.5 * (arcs[k] + arcs[(k + nb - 1) % nb]);
    }
    return w;
}

template <int Dim>
double hessian_bound(const MatrixField<Dim>& hess) {
    double beta = 0.0;
    for (const auto& H : hess.values) {
        const auto ev = eigenvalues<Dim>(H);
        beta = std::max({beta, ev.maxCoeff(), 1.0 / ev.minCoeff()});
    }
    return beta;
}

template <int Dim>
Obliqueness diagnostics_obliqueness(const PotentialSolution<Dim>& sol, const DensityCurve<Dim>& p) {
    const auto& mesh = *sol.mesh();
    const auto target = p.support_at(sol.t);
    Obliqueness out{std::numeric_limits<double>::infinity(), 0.0};
    double min_grad = std::numeric_limits<double>::infinity();
    for (int k = 0; k < mesh.n_boundary(); ++k) {
        const Vec<Dim> gh = target.grad_h(sol.grad_phi[mesh.n_interior() + k]);
        out.rho = std::min(out.rho, gh.dot(mesh.trace().normals[k]));
        min_grad = std::min(min_grad, gh.norm());
    }
    const double beta = hessian_bound(sol.hess_phi);
    out.floor = min_grad / (beta * beta);
    return out;
}

template <int Dim>
PotentialSolution<Dim> solve_monge_ampere(double t, const ReferenceDensity<Dim>& q,
                                          const DensityCurve<Dim>& p, MeshPtr<Dim> mesh,
                                          const std::optional<ScalarField<Dim>>& init,
                                          const SolverOptions& opts) {
    if (!mesh) throw InvalidArgument("solve: no mesh");
    if (!p.support().param_interval().contains(t)) {
        throw InvalidArgument("solve: t outside the parameter interval");
    }
    int ref = opts.reference_node;
    if (ref < 0) {
        ref = mesh->nearest_node(mesh->domain().witness());
    }
    if (ref >= mesh->n_interior()) {
        throw InvalidArgument("solve: reference node must be an interior node");
    }
    if (init && init->mesh() != mesh) {
        throw InvalidArgument("solve: initial guess lives on a different mesh");
    }

    const int n = mesh->size();
    const int ni = mesh->n_interior();
    const Eigen::VectorXd log_q = log_q_at_interior(*mesh, q);
    const auto weights = mesh->interior_weights();

    Eigen::VectorXd phi = init ? init->values() : initial_potential(t, p, mesh, opts.init_shrink).values();
    phi.array() -= phi[ref];
    ScalarField<Dim> field(mesh, phi);
    Evaluation<Dim> ev = evaluate<Dim>(t, field, log_q, p);

    double lambda = 0.0;
    {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < ni; ++i) {
            num += weights[i] * ev.gamma.interior[i];
            den += weights[i];
        }
        lambda = -num / den;
    }
    Eigen::VectorXd F = stack(ev.gamma, lambda);

    Eigen::VectorXd column = Eigen::VectorXd::Zero(n);
    column.head(ni).setOnes();
    Eigen::VectorXd pin = Eigen::VectorXd::Zero(n);
    pin[ref] = 1.0;

    std::vector<double> history;
    int iter = 0;
    for (;; ++iter) {
        const double res_i = F.head(ni).lpNorm<Eigen::Infinity>();
        const double res_b = F.tail(n - ni).lpNorm<Eigen::Infinity>();
        history.push_back(std::max(res_i, res_b));
        if (res_i <= opts.tol_nl && res_b <= opts.tol_nl) break;
        if (iter >= opts.max_newton) {
            throw NonConvergence("Newton iteration cap reached", res_i, res_b, iter);
        }

        const SparseOp J = linearized_matrix<Dim>(*mesh, t, p, ev.grad, ev.hess);
        const BorderedSolution step = solve_bordered(J, column, pin, -F);

        const double f0 = F.squaredNorm();
        double alpha = 1.0;
        for (;;) {
            if (alpha < opts.min_step) {
                throw Stagnation("line search step underflow", res_i, res_b, iter);
            }
            try {
                ScalarField<Dim> trial(mesh, phi + alpha * step.x);
                Evaluation<Dim> trial_ev = evaluate<Dim>(t, trial, log_q, p);
                const double trial_lambda = lambda + alpha * step.multiplier;
                Eigen::VectorXd trial_F = stack(trial_ev.gamma, trial_lambda);
                if (trial_F.squaredNorm() <= (1.0 - 2.0 * opts.armijo * alpha) * f0) {
                    phi = trial.values();
                    field = std::move(trial);
                    ev = std::move(trial_ev);
                    lambda = trial_lambda;
                    F = std::move(trial_F);
                    break;
                }
            } catch (const ConvexityViolation&) {
            } catch (const RangeViolation&) {
            }
            alpha *= opts.backtrack;
        }
    }

    PotentialSolution<Dim> sol;
    sol.t = t;
    sol.grad_phi = std::move(ev.grad);
    sol.hess_phi = std::move(ev.hess);
    sol.residual_interior = F.head(ni).lpNorm<Eigen::Infinity>();
    sol.residual_boundary = F.tail(n - ni).lpNorm<Eigen::Infinity>();
    sol.mass_defect = lambda;
    sol.newton_iters = iter;
    sol.residual_history = std::move(history);

    // Re-shift to the boundary normalization \int_{\partial Omega_t} p_t phi(grad phi*) = 0.
    const Eigen::VectorXd arcs = image_arc_weights<Dim>(*mesh, t, p, sol.grad_phi);
    sol.constraint_weights.resize(n - ni);
    for (int k = 0; k < n - ni; ++k) {
        sol.constraint_weights[k] = p.p(t, sol.grad_phi[ni + k]) * arcs[k];
    }
    const double shift = sol.constraint_weights.dot(phi.tail(n - ni)) / sol.constraint_weights.sum();
    phi.array() -= shift;
    sol.phi = ScalarField<Dim>(mesh, phi);

    const Obliqueness obl = diagnostics_obliqueness(sol, p);
    sol.rho = obl.rho;
    sol.rho_floor = obl.floor;
    sol.beta = hessian_bound(sol.hess_phi);
    return sol;
}

template <int Dim>
double pushforward_check(const PotentialSolution<Dim>& sol, const ReferenceDensity<Dim>& q,
                         const DensityCurve<Dim>& p, int cells) {
    if (cells < 1) throw InvalidArgument("pushforward: need at least one cell");
    const auto& mesh = *sol.mesh();
    const auto target = p.support_at(sol.t);
    const Box<Dim> box = target.bounding_box();
    const Vec<Dim> width = box.extent() / cells;

    auto cell_of = [&](const Vec<Dim>& y) {
        long flat = 0;
        for (int d = Dim - 1; d >= 0; --d) {
            const long k = static_cast<long>(std::floor((y[d] - box.lo[d]) / width[d]));
            if (k < 0 || k >= cells) return -1L;
            flat = flat * cells + k;
        }
        return flat;
    };
    const long n_cells = static_cast<long>(std::pow(cells, Dim));
    std::vector<double> source(n_cells, 0.0), image(n_cells, 0.0);

    for (const auto& s : mesh.fine_samples(4)) {
        const Vec<Dim> y = interpolate_gradient(sol.grad_phi, sol.hess_phi, s.point);
        const long c = cell_of(y);
        if (c >= 0) source[c] += s.weight * q.q(s.point);
    }

    constexpr int fine = 128;
    const Vec<Dim> step = box.extent() / fine;
    const double vol = step.prod();
    if constexpr (Dim == 1) {
        for (int a = 0; a < fine; ++a) {
            const Vec<1> y = box.lo + Vec<1>::Constant((a + 0.5) * step[0]);
            if (target.contains(y)) image[cell_of(y)] += vol * p.p(sol.t, y);
        }
    } else {
        for (int a = 0; a < fine; ++a)
            for (int b = 0; b < fine; ++b) {
                const Vec<2> y = box.lo + Vec<2>((a + 0.5) * step[0], (b + 0.5) * step[1]);
                if (target.contains(y)) image[cell_of(y)] += vol * p.p(sol.t, y);
            }
    }
    double worst = 0.0;
    for (long c = 0; c < n_cells; ++c) worst = std::max(worst, std::abs(source[c] - image[c]));
    return worst;
}

template <int Dim>
double monotonicity_check(const PotentialSolution<Dim>& sol, int pairs, std::uint64_t seed) {
    const int n = sol.mesh()->size();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < pairs; ++k) {
        const int i = pick(rng);
        const int j = pick(rng);
        if (i == j) continue;
        const Vec<Dim> dx = sol.mesh()->node(i) - sol.mesh()->node(j);
        worst = std::min(worst, (sol.grad_phi[i] - sol.grad_phi[j]).dot(dx));
    }
    return worst;
}

#define MASENSE_INSTANTIATE(D)                                                                     \
    template GammaResidual assemble_gamma<D>(double, const ScalarField<D>&,                        \
                                             const ReferenceDensity<D>&, const DensityCurve<D>&);  \
    template ScalarField<D> initial_potential<D>(double, const DensityCurve<D>&, MeshPtr<D>,       \
                                                 double);                                          \
    template PotentialSolution<D> solve_monge_ampere<D>(                                           \
        double, const ReferenceDensity<D>&, const DensityCurve<D>&, MeshPtr<D>,                    \
        const std::optional<ScalarField<D>>&, const SolverOptions&);                               \
    template Eigen::VectorXd image_arc_weights<D>(const Mesh<D>&, double, const DensityCurve<D>&, \
                                                  const VectorField<D>&);                          \
    template Obliqueness diagnostics_obliqueness<D>(const PotentialSolution<D>&,                   \
                                                    const DensityCurve<D>&);                       \
    template double hessian_bound<D>(const MatrixField<D>&);                                       \
    template double pushforward_check<D>(const PotentialSolution<D>&, const ReferenceDensity<D>&,  \
                                         const DensityCurve<D>&, int);                             \
    template double monotonicity_check<D>(const PotentialSolution<D>&, int, std::uint64_t);

MASENSE_INSTANTIATE(1)
MASENSE_INSTANTIATE(2)

}  // namespace masense
