#include "masense/models.hpp"

#include "masense/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace masense {
namespace {

using boost::math::quadrature::gauss_kronrod;

double integrate_1d(const std::function<double(double)>& f, double a, double b) {
    if (b <= a) {
        return 0.0;
    }
    return gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-13);
}

// Solves g(x) = 0 on [a, b] given g(a) <= 0 <= g(b).
double bracketed_root(const std::function<double(double)>& g, double a, double b) {
    const double ga = g(a);
    const double gb = g(b);
    if (ga >= 0.0) return a;
    if (gb <= 0.0) return b;
    boost::uintmax_t max_iter = 200;
    auto [lo, hi] = boost::math::tools::toms748_solve(
        g, a, b, ga, gb, boost::math::tools::eps_tolerance<double>(50), max_iter);
    return 0.5 * (lo + hi);
}

template <int Dim>
struct Normalizer {
    Normalizer(DomainCurve<Dim> curve, LogPotential<Dim> potential)
        : support(std::move(curve)), psi(std::move(potential)) {}

    DomainCurve<Dim> support;
    LogPotential<Dim> psi;
    mutable std::mutex mutex;
    mutable std::map<double, std::pair<double, double>> cache;

    // (log Z(t), d/dt log Z(t)).
    std::pair<double, double> at(double t) const {
        {
            std::lock_guard lock(mutex);
            if (auto it = cache.find(t); it != cache.end()) {
                return it->second;
            }
        }
        const auto domain = support.at(t);
        const double shift = psi.value(t, domain.witness());
        auto weight = [&](const Vec<Dim>& y) { return std::exp(psi.value(t, y) - shift); };
        const double z = integrate_domain<Dim>(domain, weight);
        const double dz_volume = integrate_domain<Dim>(
            domain, [&](const Vec<Dim>& y) { return psi.dt(t, y) * weight(y); });
        const double dz_boundary = integrate_boundary_flux<Dim>(support, t, weight);
        const std::pair<double, double> entry{shift + std::log(z), (dz_volume + dz_boundary) / z};
        std::lock_guard lock(mutex);
        cache.emplace(t, entry);
        return entry;
    }
};

}  // namespace

template <int Dim>
DensityCurve<Dim>::DensityCurve(ScalarFn log_p, GradientFn grad_log_p, ScalarFn dt_log_p,
                                DomainCurve<Dim> support, double normalization_tol)
    : log_p_(std::move(log_p)), grad_log_p_(std::move(grad_log_p)),
      dt_log_p_(std::move(dt_log_p)), support_(std::move(support)),
      normalization_tol_(normalization_tol) {}

template <int Dim>
ReferenceDensity<Dim>::ReferenceDensity(ScalarFn log_q, ConvexDomain<Dim> domain)
    : log_q_(std::move(log_q)), domain_(std::move(domain)) {}

template <int Dim>
ReferenceDensity<Dim> uniform_reference(const ConvexDomain<Dim>& domain) {
    const double volume = integrate_domain<Dim>(domain, [](const Vec<Dim>&) { return 1.0; });
    const double log_q = -std::log(volume);
    return ReferenceDensity<Dim>([log_q](const Vec<Dim>&) { return log_q; }, domain);
}

template <int Dim>
DensityCurve<Dim> uniform_ball_curve(const MovingBall<Dim>& ball, Interval interval) {
    auto support = moving_ball_curve<Dim>(ball, interval);
    return DensityCurve<Dim>(
        [ball](double t, const Vec<Dim>&) {
            return -std::log(unit_ball_volume<Dim>() * std::pow(ball.radius(t), Dim));
        },
        [](double, const Vec<Dim>&) -> Vec<Dim> { return Vec<Dim>::Zero(); },
        [ball](double t, const Vec<Dim>&) { return -Dim * ball.radius_rate(t) / ball.radius(t); },
        support);
}

template <int Dim>
DensityCurve<Dim> uniform_dilation_curve(double rate, Interval interval) {
    if (!(1.0 + rate * interval.lo > 0.0) || !(1.0 + rate * interval.hi > 0.0)) {
        throw InvalidArgument("uniform dilation: radius 1 + rate t must stay positive on I");
    }
    MovingBall<Dim> ball{
        [](double) -> Vec<Dim> { return Vec<Dim>::Zero(); },
        [](double) -> Vec<Dim> { return Vec<Dim>::Zero(); },
        [rate](double t) { return 1.0 + rate * t; },
        [rate](double) { return rate; },
    };
    return uniform_ball_curve<Dim>(ball, interval);
}

template <int Dim>
DensityCurve<Dim> translation_curve(const Vec<Dim>& velocity, Interval interval) {
    const Vec<Dim> v = velocity;
    MovingBall<Dim> ball{
        [v](double t) -> Vec<Dim> { return t * v; },
        [v](double) -> Vec<Dim> { return v; },
        [](double) { return 1.0; },
        [](double) { return 0.0; },
    };
    return uniform_ball_curve<Dim>(ball, interval);
}

template <int Dim>
DensityCurve<Dim> exponential_family_curve(const DomainCurve<Dim>& support, LogPotential<Dim> psi,
                                           double normalization_tol) {
    auto normalizer = std::make_shared<Normalizer<Dim>>(support, psi);

    // Density must stay bounded away from 0 and infinity on the support.
    const Interval I = support.param_interval();
    for (double t : {I.lo, 0.5 * (I.lo + I.hi), I.hi}) {
        const auto domain = support.at(t);
        const auto [log_z, dlog_z] = normalizer->at(t);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        auto probe = [&](const Vec<Dim>& y) {
            const double v = psi.value(t, y) - log_z;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        };
        probe(domain.witness());
        for (const auto& y : boundary_trace<Dim>(domain, 32).points) probe(y);
        if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(dlog_z) || hi - lo > 27.6) {
            throw ModelError("exponential family: density not bounded away from 0 and infinity at t = " +
                             std::to_string(t));
        }
    }

    return DensityCurve<Dim>(
        [normalizer](double t, const Vec<Dim>& y) {
            return normalizer->psi.value(t, y) - normalizer->at(t).first;
        },
        [normalizer](double t, const Vec<Dim>& y) { return normalizer->psi.gradient(t, y); },
        [normalizer](double t, const Vec<Dim>& y) {
            return normalizer->psi.dt(t, y) - normalizer->at(t).second;
        },
        support, normalization_tol);
}

template <int Dim>
DensityCurve<Dim> gaussian_bump_curve(const DomainCurve<Dim>& support, double amplitude) {
    const double a = amplitude;
    LogPotential<Dim> psi{
        [a](double t, const Vec<Dim>& y) { return -a * t * y.squaredNorm(); },
        [a](double t, const Vec<Dim>& y) -> Vec<Dim> { return -2.0 * a * t * y; },
        [a](double, const Vec<Dim>& y) { return -a * y.squaredNorm(); },
    };
    return exponential_family_curve<Dim>(support, psi);
}

DensityCurve<1> exponential_tilt_curve(const DomainCurve<1>& support, double rate) {
    const double a = rate;
    LogPotential<1> psi{
        [a](double t, const Vec<1>& y) { return -a * t * y[0]; },
        [a](double t, const Vec<1>&) -> Vec<1> { return Vec<1>::Constant(-a * t); },
        [a](double, const Vec<1>& y) { return -a * y[0]; },
    };
    return exponential_family_curve<1>(support, psi);
}

template <int Dim>
double normalization_error(const DensityCurve<Dim>& p, double t) {
    const auto domain = p.support_at(t);
    const double mass = integrate_domain<Dim>(domain, [&](const Vec<Dim>& y) { return p.p(t, y); });
    return std::abs(mass - 1.0);
}

// ---------------------------------------------------------------------------
// One-dimensional oracle

TransportOracle1D::TransportOracle1D(DensityCurve<1> p, ReferenceDensity<1> q)
    : p_(std::move(p)), q_(std::move(q)) {
    q_lo_ = q_.domain().boundary_point(Vec<1>::Constant(-1.0))[0];
}

std::pair<double, double> TransportOracle1D::support(double t) const {
    const auto domain = p_.support_at(t);
    return {domain.boundary_point(Vec<1>::Constant(-1.0))[0],
            domain.boundary_point(Vec<1>::Constant(1.0))[0]};
}

double TransportOracle1D::cdf_q(double x) const {
    return integrate_1d([&](double s) { return q_.q(Vec<1>::Constant(s)); }, q_lo_, x);
}

double TransportOracle1D::cdf_p(double t, double y) const {
    const double a = support(t).first;
    return integrate_1d([&](double s) { return p_.p(t, Vec<1>::Constant(s)); }, a, y);
}

double TransportOracle1D::map(double t, double x) const {
    const double level = cdf_q(x);
    if (level < -1e-12 || level > 1.0 + 1e-9) {
        throw OracleError("1D oracle: reference CDF out of [0, 1]");
    }
    const auto [a, b] = support(t);
    return bracketed_root([&](double y) { return cdf_p(t, y) - level; }, a, b);
}

double TransportOracle1D::map_rate(double t, double x) const {
    const double y = map(t, x);
    const auto domain = p_.support_at(t);
    const double a = support(t).first;
    const Vec<1> left = Vec<1>::Constant(a);
    // Leibniz rule with the moving left endpoint: h_t(a_t) = 0.
    const double da = -p_.support().dt_h(t, left) / domain.grad_h(left)[0];
    const double dcdf =
        integrate_1d(
            [&](double s) {
                const Vec<1> z = Vec<1>::Constant(s);
                return p_.p(t, z) * p_.dt_log_p(t, z);
            },
            a, y) -
        p_.p(t, left) * da;
    return -dcdf / p_.p(t, Vec<1>::Constant(y));
}

// ---------------------------------------------------------------------------
// Radial oracle

namespace {

double radial_extent(const ConvexDomain<2>& domain) {
    const Vec<2> origin = Vec<2>::Zero();
    if (!domain.contains(origin)) {
        throw OracleError("radial oracle: support does not contain the origin");
    }
    const double r0 = domain.ray_distance(origin, Vec<2>(1.0, 0.0));
    for (int k = 1; k < 16; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / 16;
        const double r = domain.ray_distance(origin, Vec<2>(std::cos(theta), std::sin(theta)));
        if (std::abs(r - r0) > 1e-10 * std::max(1.0, r0)) {
            throw OracleError("radial oracle: support is not a ball about the origin");
        }
    }
    return r0;
}

void check_angular(const std::function<double(const Vec<2>&)>& f, double radius) {
    for (double frac : {0.25, 0.5, 0.75}) {
        const double ref = f(Vec<2>(frac * radius, 0.0));
        for (int k = 1; k < 16; ++k) {
            const double theta = 2.0 * std::numbers::pi * k / 16;
            const Vec<2> y = frac * radius * Vec<2>(std::cos(theta), std::sin(theta));
            if (std::abs(f(y) - ref) > 1e-10 * std::max(1.0, std::abs(ref))) {
                throw OracleError("radial oracle: density varies with angle");
            }
        }
    }
}

}  // namespace

RadialOracle::RadialOracle(DensityCurve<2> p, ReferenceDensity<2> q)
    : p_(std::move(p)), q_(std::move(q)) {
    const double rq = radial_extent(q_.domain());
    check_angular([&](const Vec<2>& x) { return q_.log_q(x); }, rq);
    const Interval I = p_.support().param_interval();
    for (int k = 0; k <= 4; ++k) {
        check_radial(I.lo + (I.hi - I.lo) * k / 4.0);
    }
}

void RadialOracle::check_radial(double t) const {
    const double r = radial_extent(p_.support_at(t));
    check_angular([&](const Vec<2>& y) { return p_.log_p(t, y); }, r);
    check_angular([&](const Vec<2>& y) { return p_.dt_log_p(t, y); }, r);
}

double RadialOracle::mass_q(double s) const {
    return integrate_1d(
        [&](double r) { return q_.q(Vec<2>(r, 0.0)) * 2.0 * std::numbers::pi * r; }, 0.0, s);
}

double RadialOracle::mass_p(double t, double r) const {
    return integrate_1d(
        [&](double s) { return p_.p(t, Vec<2>(s, 0.0)) * 2.0 * std::numbers::pi * s; }, 0.0, r);
}

double RadialOracle::radius_map(double t, double s) const {
    const double target = mass_q(s);
    const double outer = p_.support_at(t).ray_distance(Vec<2>::Zero(), Vec<2>(1.0, 0.0));
    return bracketed_root([&](double r) { return mass_p(t, r) - target; }, 0.0, outer);
}

double RadialOracle::radius_rate(double t, double s) const {
    const double rho = radius_map(t, s);
    if (rho <= 0.0) {
        return 0.0;
    }
    const double dmass = integrate_1d(
        [&](double r) {
            const Vec<2> y(r, 0.0);
            return p_.p(t, y) * p_.dt_log_p(t, y) * 2.0 * std::numbers::pi * r;
        },
        0.0, rho);
    return -dmass / (2.0 * std::numbers::pi * rho * p_.p(t, Vec<2>(rho, 0.0)));
}

std::pair<Vec<2>, Vec<2>> RadialOracle::operator()(double t, const Vec<2>& x) const {
    const double s = x.norm();
    if (s == 0.0) {
        return {Vec<2>::Zero(), Vec<2>::Zero()};
    }
    const Vec<2> dir = x / s;
    return {radius_map(t, s) * dir, radius_rate(t, s) * dir};
}

template class DensityCurve<1>;
template class DensityCurve<2>;
template class ReferenceDensity<1>;
template class ReferenceDensity<2>;

template ReferenceDensity<1> uniform_reference<1>(const ConvexDomain<1>&);
template ReferenceDensity<2> uniform_reference<2>(const ConvexDomain<2>&);
template DensityCurve<1> uniform_ball_curve<1>(const MovingBall<1>&, Interval);
template DensityCurve<2> uniform_ball_curve<2>(const MovingBall<2>&, Interval);
template DensityCurve<1> uniform_dilation_curve<1>(double, Interval);
template DensityCurve<2> uniform_dilation_curve<2>(double, Interval);
template DensityCurve<1> translation_curve<1>(const Vec<1>&, Interval);
template DensityCurve<2> translation_curve<2>(const Vec<2>&, Interval);
template DensityCurve<1> exponential_family_curve<1>(const DomainCurve<1>&, LogPotential<1>,
                                                     double);
template DensityCurve<2> exponential_family_curve<2>(const DomainCurve<2>&, LogPotential<2>,
                                                     double);
template DensityCurve<1> gaussian_bump_curve<1>(const DomainCurve<1>&, double);
template DensityCurve<2> gaussian_bump_curve<2>(const DomainCurve<2>&, double);
template double normalization_error<1>(const DensityCurve<1>&, double);
template double normalization_error<2>(const DensityCurve<2>&, double);

}  // namespace masense
