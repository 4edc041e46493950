#pragma once

#include "masense/geometry.hpp"

#include <functional>

namespace masense {

// Adaptive quadrature over a convex domain in polar coordinates about its
// witness point: Gauss-Kronrod in the radius, periodic trapezoid in the angle
// (two rays in one dimension).

template <int Dim>
using PointFn = std::function<double(const Vec<Dim>&)>;

/// \int_{Omega} f.
template <int Dim>
double integrate_domain(const ConvexDomain<Dim>& domain, const PointFn<Dim>& f, double tol = 1e-12);

/// \int_{\partial Omega} f dS (counting measure in one dimension).
template <int Dim>
double integrate_boundary(const ConvexDomain<Dim>& domain, const PointFn<Dim>& f,
                          double tol = 1e-12);

/// \int_{\partial Omega_t} f (-\partial_t h_t) dS: the boundary-motion part of
/// d/dt \int_{Omega_t} f for a domain curve.
template <int Dim>
double integrate_boundary_flux(const DomainCurve<Dim>& curve, double t, const PointFn<Dim>& f,
                               double tol = 1e-12);

/// Volume of the unit ball in Dim dimensions.
template <int Dim>
constexpr double unit_ball_volume() {
    if constexpr (Dim == 1) {
        return 2.0;
    } else {
        return 3.14159265358979323846;
    }
}

}  // namespace masense
