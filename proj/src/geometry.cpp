#include "masense/geometry.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

namespace masense {

template <int Dim>
ConvexDomain<Dim>::ConvexDomain(ValueFn h, GradientFn grad_h, HessianFn hess_h, double kappa,
                                Box<Dim> bounding_box, Vec<Dim> witness)
    : h_(std::move(h)), grad_h_(std::move(grad_h)), hess_h_(std::move(hess_h)), kappa_(kappa),
      bounding_box_(bounding_box), witness_(witness) {
    if (!(kappa_ > 0.0) || !std::isfinite(kappa_)) {
        throw InvalidArgument("convex domain: kappa must be positive and finite");
    }
    if (!(h_(witness_) < 0.0)) {
        throw InvalidArgument("convex domain: witness point is not interior");
    }
}

template <int Dim>
double ConvexDomain<Dim>::ray_distance(const Vec<Dim>& origin, const Vec<Dim>& direction) const {
    auto f = [&](double r) { return h_(origin + r * direction); };
    const double f0 = f(0.0);
    if (!(f0 < 0.0)) {
        throw GeometryError("ray shooting: origin is not interior");
    }
    double hi = 2.0 * bounding_box_.extent().norm() + 1e-12;
    double fhi = f(hi);
    for (int k = 0; k < 8 && !(fhi > 0.0); ++k) {
        hi *= 2.0;
        fhi = f(hi);
    }
    if (!(fhi > 0.0)) {
        throw GeometryError("ray shooting: boundary not bracketed along ray");
    }
    boost::uintmax_t max_iter = 200;
    auto [a, b] = boost::math::tools::toms748_solve(
        f, 0.0, hi, f0, fhi, boost::math::tools::eps_tolerance<double>(50), max_iter);
    if (max_iter >= 200) {
        throw GeometryError("ray shooting: root finder did not converge");
    }
    return 0.5 * (a + b);
}

template <int Dim>
double ConvexDomain<Dim>::distance_estimate(const Vec<Dim>& y) const {
    const double g = grad_h_(y).norm();
    if (g <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -h_(y) / g;
}

template <int Dim>
DomainCurve<Dim>::DomainCurve(FamilyFn at, RateFn dt_h, Interval param_interval)
    : at_(std::move(at)), dt_h_(std::move(dt_h)), interval_(param_interval) {
    if (!(interval_.lo <= interval_.hi)) {
        throw InvalidArgument("domain curve: empty parameter interval");
    }
}

template <int Dim>
ConvexDomain<Dim> DomainCurve<Dim>::at(double t) const {
    if (!interval_.contains(t)) {
        throw InvalidArgument("domain curve: t = " + std::to_string(t) +
                              " outside the parameter interval");
    }
    return at_(t);
}

template <int Dim>
ConvexDomain<Dim> make_ball_domain(const Vec<Dim>& center, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw InvalidArgument("ball domain: radius must be positive");
    }
    const Vec<Dim> c = center;
    const double r = radius;
    Box<Dim> box;
    box.lo = c.array() - r;
    box.hi = c.array() + r;
    return ConvexDomain<Dim>(
        [c, r](const Vec<Dim>& y) { return ((y - c).squaredNorm() - r * r) / (2.0 * r); },
        [c, r](const Vec<Dim>& y) -> Vec<Dim> { return (y - c) / r; },
        [r](const Vec<Dim>&) -> Mat<Dim> { return Mat<Dim>::Identity() / r; },
        std::max(r, 1.0 / r), box, c);
}

template <int Dim>
DomainCurve<Dim> static_domain_curve(const ConvexDomain<Dim>& domain, Interval interval) {
    return DomainCurve<Dim>([domain](double) { return domain; },
                            [](double, const Vec<Dim>&) { return 0.0; }, interval);
}

template <int Dim>
DomainCurve<Dim> moving_ball_curve(const MovingBall<Dim>& ball, Interval interval) {
    constexpr int samples = 16;
    for (int k = 0; k <= samples; ++k) {
        const double t = interval.lo + (interval.hi - interval.lo) * k / samples;
        if (!(ball.radius(t) > 0.0)) {
            throw InvalidArgument("moving ball: degenerate radius at t = " + std::to_string(t));
        }
    }
    auto at = [ball](double t) { return make_ball_domain<Dim>(ball.center(t), ball.radius(t)); };
    auto rate = [ball](double t, const Vec<Dim>& y) {
        const Vec<Dim> d = y - ball.center(t);
        const double r = ball.radius(t);
        const double dr = ball.radius_rate(t);
        return -d.dot(ball.center_rate(t)) / r - dr * d.squaredNorm() / (2.0 * r * r) - 0.5 * dr;
    };
    return DomainCurve<Dim>(at, rate, interval);
}

template <int Dim>
DomainCurve<Dim> dilation_domain_curve(double rate, Interval interval) {
    if (!(1.0 + rate * interval.lo > 0.0) || !(1.0 + rate * interval.hi > 0.0)) {
        throw InvalidArgument("dilation curve: radius 1 + rate t must stay positive on I");
    }
    MovingBall<Dim> ball{
        [](double) -> Vec<Dim> { return Vec<Dim>::Zero(); },
        [](double) -> Vec<Dim> { return Vec<Dim>::Zero(); },
        [rate](double t) { return 1.0 + rate * t; },
        [rate](double) { return rate; },
    };
    return moving_ball_curve<Dim>(ball, interval);
}

template <int Dim>
DomainCurve<Dim> translation_domain_curve(const Vec<Dim>& velocity, Interval interval) {
    const Vec<Dim> v = velocity;
    MovingBall<Dim> ball{
        [v](double t) -> Vec<Dim> { return t * v; },
        [v](double) -> Vec<Dim> { return v; },
        [](double) { return 1.0; },
        [](double) { return 0.0; },
    };
    return moving_ball_curve<Dim>(ball, interval);
}

double arc_length(const Vec<2>& a, const Vec<2>& normal_a, const Vec<2>& b,
                  const Vec<2>& normal_b) {
    const double chord = (b - a).norm();
    const double cosine = std::clamp(normal_a.dot(normal_b), -1.0, 1.0);
    const double half = 0.5 * std::acos(cosine);
    if (half < 1e-8) {
        return chord;
    }
    return chord * half / std::sin(half);
}

template <int Dim>
BoundaryTrace<Dim> boundary_trace(const ConvexDomain<Dim>& domain, int n) {
    BoundaryTrace<Dim> trace;
    if constexpr (Dim == 1) {
        for (double s : {-1.0, 1.0}) {
            const Vec<1> dir = Vec<1>::Constant(s);
            trace.points.push_back(domain.boundary_point(dir));
            trace.normals.push_back(dir);
            trace.weights.push_back(1.0);
        }
    } else {
        if (n < 4) {
            throw InvalidArgument("boundary trace: need at least 4 nodes");
        }
        trace.points.reserve(n);
        trace.normals.reserve(n);
        for (int k = 0; k < n; ++k) {
            const double theta = 2.0 * std::numbers::pi * k / n;
            const Vec<2> dir(std::cos(theta), std::sin(theta));
            const Vec<2> y = domain.boundary_point(dir);
            trace.points.push_back(y);
            trace.normals.push_back(domain.grad_h(y).normalized());
        }
        std::vector<double> arcs(n);
        for (int k = 0; k < n; ++k) {
            const int j = (k + 1) % n;
            arcs[k] = arc_length(trace.points[k], trace.normals[k], trace.points[j],
                                 trace.normals[j]);
        }
        trace.weights.resize(n);
        for (int k = 0; k < n; ++k) {
            trace.weights[k] = 0.5 * (arcs[k] + arcs[(k + n - 1) % n]);
        }
    }
    return trace;
}

template <int Dim>
double perimeter(const ConvexDomain<Dim>& domain) {
    if constexpr (Dim == 1) {
        return 2.0;
    } else {
        const auto trace = boundary_trace<Dim>(domain, 1024);
        double total = 0.0;
        for (double w : trace.weights) total += w;
        return total;
    }
}

template class ConvexDomain<1>;
template class ConvexDomain<2>;
template class DomainCurve<1>;
template class DomainCurve<2>;

template ConvexDomain<1> make_ball_domain<1>(const Vec<1>&, double);
template ConvexDomain<2> make_ball_domain<2>(const Vec<2>&, double);
template DomainCurve<1> static_domain_curve<1>(const ConvexDomain<1>&, Interval);
template DomainCurve<2> static_domain_curve<2>(const ConvexDomain<2>&, Interval);
template DomainCurve<1> moving_ball_curve<1>(const MovingBall<1>&, Interval);
template DomainCurve<2> moving_ball_curve<2>(const MovingBall<2>&, Interval);
template DomainCurve<1> dilation_domain_curve<1>(double, Interval);
template DomainCurve<2> dilation_domain_curve<2>(double, Interval);
template DomainCurve<1> translation_domain_curve<1>(const Vec<1>&, Interval);
template DomainCurve<2> translation_domain_curve<2>(const Vec<2>&, Interval);
template BoundaryTrace<1> boundary_trace<1>(const ConvexDomain<1>&, int);
template BoundaryTrace<2> boundary_trace<2>(const ConvexDomain<2>&, int);
template double perimeter<1>(const ConvexDomain<1>&);
template double perimeter<2>(const ConvexDomain<2>&);

}  // namespace masense
