#pragma once

#include "masense/geometry.hpp"

#include <functional>
#include <memory>
#include <utility>

namespace masense {

/// Curve of target densities p_t on Omega_t, represented through log p_t and
/// its spatial gradient and time derivative.
template <int Dim>
class DensityCurve {
public:
    using ScalarFn = std::function<double(double, const Vec<Dim>&)>;
    using GradientFn = std::function<Vec<Dim>(double, const Vec<Dim>&)>;

    DensityCurve(ScalarFn log_p, GradientFn grad_log_p, ScalarFn dt_log_p, DomainCurve<Dim> support,
                 double normalization_tol = 1e-8);

    double log_p(double t, const Vec<Dim>& y) const { return log_p_(t, y); }
    double p(double t, const Vec<Dim>& y) const { return std::exp(log_p_(t, y)); }
    Vec<Dim> grad_log_p(double t, const Vec<Dim>& y) const { return grad_log_p_(t, y); }
    double dt_log_p(double t, const Vec<Dim>& y) const { return dt_log_p_(t, y); }

    const DomainCurve<Dim>& support() const { return support_; }
    ConvexDomain<Dim> support_at(double t) const { return support_.at(t); }
    double normalization_tol() const { return normalization_tol_; }

private:
    ScalarFn log_p_;
    GradientFn grad_log_p_;
    ScalarFn dt_log_p_;
    DomainCurve<Dim> support_;
    double normalization_tol_;
};

/// Reference density q on Omega.
template <int Dim>
class ReferenceDensity {
public:
    using ScalarFn = std::function<double(const Vec<Dim>&)>;

    ReferenceDensity(ScalarFn log_q, ConvexDomain<Dim> domain);

    double log_q(const Vec<Dim>& x) const { return log_q_(x); }
    double q(const Vec<Dim>& x) const { return std::exp(log_q_(x)); }
    const ConvexDomain<Dim>& domain() const { return domain_; }

private:
    ScalarFn log_q_;
    ConvexDomain<Dim> domain_;
};

template <int Dim>
ReferenceDensity<Dim> uniform_reference(const ConvexDomain<Dim>& domain);

/// Uniform density on a moving ball (closed-form normalisation).
template <int Dim>
DensityCurve<Dim> uniform_ball_curve(const MovingBall<Dim>& ball, Interval interval);

/// p_t uniform on B(0, 1 + rate t).
template <int Dim>
DensityCurve<Dim> uniform_dilation_curve(double rate, Interval interval = {-0.25, 1.25});

/// p_t uniform on B(velocity t, 1).
template <int Dim>
DensityCurve<Dim> translation_curve(const Vec<Dim>& velocity, Interval interval = {-0.25, 1.25});

/// Log-potential psi(t, y) with its y-gradient and t-derivative.
template <int Dim>
struct LogPotential {
    std::function<double(double, const Vec<Dim>&)> value;
    std::function<Vec<Dim>(double, const Vec<Dim>&)> gradient;
    std::function<double(double, const Vec<Dim>&)> dt;
};

/// p_t = exp(psi_t) / Z(t) on Omega_t. Z(t) and d/dt log Z(t) are computed by
/// adaptive quadrature (with the moving-boundary term) once per t and cached;
/// the cache is safe for concurrent readers.
template <int Dim>
DensityCurve<Dim> exponential_family_curve(const DomainCurve<Dim>& support, LogPotential<Dim> psi,
                                           double normalization_tol = 1e-8);

/// p_t proportional to exp(-amplitude t |y|^2) on Omega_t.
template <int Dim>
DensityCurve<Dim> gaussian_bump_curve(const DomainCurve<Dim>& support, double amplitude);

/// One-dimensional p_t proportional to exp(-rate t y) on Omega_t.
DensityCurve<1> exponential_tilt_curve(const DomainCurve<1>& support, double rate);

/// |\int_{Omega_t} p_t - 1| by adaptive quadrature.
template <int Dim>
double normalization_error(const DensityCurve<Dim>& p, double t);

/// Closed-form one-dimensional transport: T_t = F_{p_t}^{-1} o F_q.
class TransportOracle1D {
public:
    TransportOracle1D(DensityCurve<1> p, ReferenceDensity<1> q);

    double cdf_q(double x) const;
    double cdf_p(double t, double y) const;
    double map(double t, double x) const;
    /// d/dt T_t(x) = -(d/dt F_{p_t})(T_t(x)) / p_t(T_t(x)).
    double map_rate(double t, double x) const;

private:
    std::pair<double, double> support(double t) const;

    DensityCurve<1> p_;
    ReferenceDensity<1> q_;
    double q_lo_;
};

/// Semi-analytic oracle for radially symmetric data on concentric balls about
/// the origin: T_t(x) = rho_t(|x|) x/|x| from the radial mass balance.
class RadialOracle {
public:
    RadialOracle(DensityCurve<2> p, ReferenceDensity<2> q);

    double mass_q(double s) const;
    double mass_p(double t, double r) const;
    double radius_map(double t, double s) const;
    double radius_rate(double t, double s) const;

    /// (T_t(x), d/dt T_t(x)).
    std::pair<Vec<2>, Vec<2>> operator()(double t, const Vec<2>& x) const;

private:
    void check_radial(double t) const;

    DensityCurve<2> p_;
    ReferenceDensity<2> q_;
};

}  // namespace masense
