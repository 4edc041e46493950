#pragma once

#include "masense/types.hpp"

#include <functional>
#include <vector>

namespace masense {

/// Uniformly convex domain {h < 0} given by a convex defining function h with
/// unit gradient on the boundary and (1/kappa) I <= D^2 h <= kappa I.
///
/// Geometry queries go through the callables, so they are exact up to the
/// root-finding tolerance of the ray intersection.
template <int Dim>
class ConvexDomain {
public:
    using ValueFn = std::function<double(const Vec<Dim>&)>;
    using GradientFn = std::function<Vec<Dim>(const Vec<Dim>&)>;
    using HessianFn = std::function<Mat<Dim>(const Vec<Dim>&)>;

    ConvexDomain(ValueFn h, GradientFn grad_h, HessianFn hess_h, double kappa,
                 Box<Dim> bounding_box, Vec<Dim> witness);

    double h(const Vec<Dim>& y) const { return h_(y); }
    Vec<Dim> grad_h(const Vec<Dim>& y) const { return grad_h_(y); }
    Mat<Dim> hess_h(const Vec<Dim>& y) const { return hess_h_(y); }

    double kappa() const { return kappa_; }
    const Box<Dim>& bounding_box() const { return bounding_box_; }
    const Vec<Dim>& witness() const { return witness_; }

    bool contains(const Vec<Dim>& y) const { return h_(y) < 0.0; }

    /// The enclosing set Omega': bounding box inflated by 1/kappa.
    Box<Dim> outer_box() const { return bounding_box_.inflated(1.0 / kappa_); }

    /// Distance from `origin` (interior) to the boundary along unit `direction`.
    double ray_distance(const Vec<Dim>& origin, const Vec<Dim>& direction) const;
    double ray_distance(const Vec<Dim>& direction) const { return ray_distance(witness_, direction); }
    Vec<Dim> boundary_point(const Vec<Dim>& direction) const {
        return witness_ + ray_distance(direction) * direction;
    }

    /// First-order distance-to-boundary estimate -h/|grad h| (exact sign).
    double distance_estimate(const Vec<Dim>& y) const;

private:
    ValueFn h_;
    GradientFn grad_h_;
    HessianFn hess_h_;
    double kappa_;
    Box<Dim> bounding_box_;
    Vec<Dim> witness_;
};

/// C^1 curve t -> Omega_t of convex domains, with the time derivative of h_t.
template <int Dim>
class DomainCurve {
public:
    using FamilyFn = std::function<ConvexDomain<Dim>(double)>;
    using RateFn = std::function<double(double, const Vec<Dim>&)>;

    DomainCurve(FamilyFn at, RateFn dt_h, Interval param_interval);

    /// Throws InvalidArgument when t lies outside the parameter interval.
    ConvexDomain<Dim> at(double t) const;
    double dt_h(double t, const Vec<Dim>& y) const { return dt_h_(t, y); }
    const Interval& param_interval() const { return interval_; }

private:
    FamilyFn at_;
    RateFn dt_h_;
    Interval interval_;
};

/// Ball whose centre and radius move smoothly with t.
template <int Dim>
struct MovingBall {
    std::function<Vec<Dim>(double)> center;
    std::function<Vec<Dim>(double)> center_rate;
    std::function<double(double)> radius;
    std::function<double(double)> radius_rate;
};

template <int Dim>
struct BoundaryTrace {
    std::vector<Vec<Dim>> points;
    std::vector<Vec<Dim>> normals;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }
};

// h(y) = (|y - c|^2 - r^2) / (2 r).
template <int Dim>
ConvexDomain<Dim> make_ball_domain(const Vec<Dim>& center, double radius);

template <int Dim>
DomainCurve<Dim> static_domain_curve(const ConvexDomain<Dim>& domain, Interval interval);

template <int Dim>
DomainCurve<Dim> moving_ball_curve(const MovingBall<Dim>& ball, Interval interval);

/// Omega_t = B(0, 1 + rate t).
template <int Dim>
DomainCurve<Dim> dilation_domain_curve(double rate, Interval interval = {-0.25, 1.25});

/// Omega_t = B(velocity t, 1).
template <int Dim>
DomainCurve<Dim> translation_domain_curve(const Vec<Dim>& velocity,
                                          Interval interval = {-0.25, 1.25});

/// Boundary points by ray shooting from the witness at equispaced angles.
/// In one dimension the trace is the two endpoints (left, right) with unit
/// weights (counting measure), and `n` is ignored.
template <int Dim>
BoundaryTrace<Dim> boundary_trace(const ConvexDomain<Dim>& domain, int n);

/// Arc length between two boundary points with unit normals, from the chord
/// corrected by the turning angle of the normal (exact on circles).
double arc_length(const Vec<2>& a, const Vec<2>& normal_a, const Vec<2>& b, const Vec<2>& normal_b);

/// Approximate perimeter from a fine trace; 2 in one dimension (endpoint count).
template <int Dim>
double perimeter(const ConvexDomain<Dim>& domain);

}  // namespace masense
