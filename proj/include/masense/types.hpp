#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace masense {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

/// Closed parameter interval I.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double t) const { return t >= lo && t <= hi; }
};

template <int Dim>
struct Box {
    Vec<Dim> lo = Vec<Dim>::Zero();
    Vec<Dim> hi = Vec<Dim>::Zero();

    bool contains(const Vec<Dim>& y) const {
        return (y.array() >= lo.array()).all() && (y.array() <= hi.array()).all();
    }
    Box inflated(double r) const {
        Box out;
        out.lo = lo.array() - r;
        out.hi = hi.array() + r;
        return out;
    }
    Vec<Dim> extent() const { return hi - lo; }
};

// Error taxonomy. Each failure mode named by an operation contract maps to
// one type so callers (line search, sweeps) can react selectively.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};
class GeometryError : public Error {
public:
    using Error::Error;
};
class ModelError : public Error {
public:
    using Error::Error;
};
class OracleError : public Error {
public:
    using Error::Error;
};
class MeshError : public Error {
public:
    using Error::Error;
};
class ConvexityViolation : public Error {
public:
    using Error::Error;
};
class RangeViolation : public Error {
public:
    using Error::Error;
};
class CompatibilityError : public Error {
public:
    using Error::Error;
};
class AssemblyError : public Error {
public:
    using Error::Error;
};
class LinearSolverError : public Error {
public:
    using Error::Error;
};
class ConfigError : public Error {
public:
    using Error::Error;
};
class IoError : public Error {
public:
    using Error::Error;
};

/// Raised by the Newton solver; carries the last residuals.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double interior, double boundary, int iterations)
        : Error(what), residual_interior(interior), residual_boundary(boundary),
          iterations(iterations) {}
    double residual_interior;
    double residual_boundary;
    int iterations;
};

class Stagnation : public NonConvergence {
public:
    using NonConvergence::NonConvergence;
};

}  // namespace masense
