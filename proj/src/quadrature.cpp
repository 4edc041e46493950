#include "masense/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

#include <numbers>

namespace masense {
namespace {

using boost::math::quadrature::gauss_kronrod;

// Sum (1D) or periodic integral (2D) of g over ray directions.
template <int Dim>
double integrate_directions(const std::function<double(const Vec<Dim>&)>& g, double tol) {
    if constexpr (Dim == 1) {
        return g(Vec<1>::Constant(-1.0)) + g(Vec<1>::Constant(1.0));
    } else {
        auto angular = [&](double theta) { return g(Vec<2>(std::cos(theta), std::sin(theta))); };
        return boost::math::quadrature::trapezoidal(angular, 0.0, 2.0 * std::numbers::pi, tol, 14);
    }
}

}  // namespace

template <int Dim>
double integrate_domain(const ConvexDomain<Dim>& domain, const PointFn<Dim>& f, double tol) {
    const Vec<Dim> c = domain.witness();
    auto along_ray = [&](const Vec<Dim>& dir) {
        const double r = domain.ray_distance(dir);
        auto radial = [&](double s) {
            const double jac = Dim == 1 ? 1.0 : s;
            return f(c + s * dir) * jac;
        };
        return gauss_kronrod<double, 21>::integrate(radial, 0.0, r, 15, tol);
    };
    return integrate_directions<Dim>(along_ray, tol);
}

template <int Dim>
double integrate_boundary(const ConvexDomain<Dim>& domain, const PointFn<Dim>& f, double tol) {
    // Star-shaped surface element: dS = r^{d-1} dtheta / <nu, e_theta>.
    auto along_ray = [&](const Vec<Dim>& dir) {
        const double r = domain.ray_distance(dir);
        const Vec<Dim> y = domain.witness() + r * dir;
        const Vec<Dim> nu = domain.grad_h(y).normalized();
        const double jac = Dim == 1 ? 1.0 : r;
        return f(y) * jac / nu.dot(dir);
    };
    return integrate_directions<Dim>(along_ray, tol);
}

template <int Dim>
double integrate_boundary_flux(const DomainCurve<Dim>& curve, double t, const PointFn<Dim>& f,
                               double tol) {
    const auto domain = curve.at(t);
    auto flux = [&](const Vec<Dim>& y) {
        // Normal speed of the boundary is -dt_h / |grad h|.
        return f(y) * (-curve.dt_h(t, y)) / domain.grad_h(y).norm();
    };
    return integrate_boundary<Dim>(domain, flux, tol);
}

template double integrate_domain<1>(const ConvexDomain<1>&, const PointFn<1>&, double);
template double integrate_domain<2>(const ConvexDomain<2>&, const PointFn<2>&, double);
template double integrate_boundary<1>(const ConvexDomain<1>&, const PointFn<1>&, double);
template double integrate_boundary<2>(const ConvexDomain<2>&, const PointFn<2>&, double);
template double integrate_boundary_flux<1>(const DomainCurve<1>&, double, const PointFn<1>&,
                                           double);
template double integrate_boundary_flux<2>(const DomainCurve<2>&, double, const PointFn<2>&,
                                           double);

}  // namespace masense
