#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fhn {

/// State of the full system: (x1, x2, y). x1, x2 are fast, y is slow.
using State = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoRealFolds : Error {
    NoRealFolds() : Error("cubic has no real fold points (negative discriminant)") {}
};
struct MultipleEquilibria : Error {
    MultipleEquilibria() : Error("more than one real equilibrium root") {}
};
struct AllRealEigenvalues : Error {
    AllRealEigenvalues() : Error("linearization has no complex pair") {}
};
struct StepSizeUnderflow : Error {
    explicit StepSizeUnderflow(double t)
        : Error("integration step underflow at t = " + std::to_string(t)) {}
};
struct NewtonDivergence : Error {
    explicit NewtonDivergence(double residual)
        : Error("Newton iteration failed to converge, residual = " + std::to_string(residual)),
          final_residual(residual) {}
    double final_residual;
};
struct FoldTooClose : Error {
    FoldTooClose() : Error("requested y-range is too close to a fold of the critical manifold") {}
};
struct OutOfRange : Error {
    explicit OutOfRange(const std::string& what) : Error("out of range: " + what) {}
};
struct NoSignChange : Error {
    explicit NoSignChange(const std::string& what) : Error("no sign change: " + what) {}
};
struct NoIntersection : Error {
    NoIntersection() : Error("section traces do not intersect") {}
};
struct EmptyTrace : Error {
    EmptyTrace() : Error("all seeds escaped before reaching the section") {}
};
struct NoTurn : Error {
    NoTurn() : Error("trace has no interior turn") {}
};
struct NoHomoclinic : Error {
    NoHomoclinic() : Error("no homoclinic parameter: lambda2 <= 0") {}
};
struct DomainViolation : Error {
    explicit DomainViolation(const std::string& what) : Error("domain violation: " + what) {}
};
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& what) : Error("no convergence: " + what) {}
};
struct Unbounded : Error {
    Unbounded() : Error("trajectory escaped") {}
};
struct NoOscillations : Error {
    NoOscillations() : Error("no local maxima found in trajectory") {}
};
struct Inconclusive : Error {
    Inconclusive() : Error("classification inconclusive at the time horizon") {}
};

/// System parameters of the FitzHugh-Nagumo vector field.
/// The fixed study values are delta = 5, alpha = 1/10.
struct Params {
    double p = 0.0;            ///< applied current
    double s = 1.0;            ///< wave speed, > 0
    double delta = 5.0;        ///< scale factor, > 0
    double alpha_cubic = 0.1;  ///< cubic parameter
    double eps = 1e-2;         ///< time-scale separation, >= 0

    void validate() const {
        if (!(s > 0.0)) throw Error("Params: s must be > 0");
        if (!(delta > 0.0)) throw Error("Params: delta must be > 0");
        if (!(eps >= 0.0)) throw Error("Params: eps must be >= 0");
    }

    Params with_p(double pnew) const { Params q = *this; q.p = pnew; return q; }
    Params with_s(double snew) const { Params q = *this; q.s = snew; return q; }
    Params with_eps(double enew) const { Params q = *this; q.eps = enew; return q; }
};

enum class TimeScale { Fast, Slow };

}  // namespace fhn
