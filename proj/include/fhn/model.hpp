#pragma once

#include "fhn/params.hpp"

#include <cmath>
#include <utility>

namespace fhn {

/// Cubic nonlinearity f(x1) = x1 (x1 - 1)(alpha - x1) and its derivatives.
/// Templated on the scalar so Jacobian-free differentiation stays possible.
template <class Scalar>
Scalar cubic_f(Scalar x1, Scalar alpha) {
    return x1 * (x1 - Scalar(1)) * (alpha - x1);
}

template <class Scalar>
Scalar cubic_df(Scalar x1, Scalar alpha) {
    return Scalar(-3) * x1 * x1 + Scalar(2) * (Scalar(1) + alpha) * x1 - alpha;
}

template <class Scalar>
Scalar cubic_d2f(Scalar x1, Scalar alpha) {
    return Scalar(-6) * x1 + Scalar(2) * (Scalar(1) + alpha);
}

/// Right-hand side of the FitzHugh-Nagumo system.
/// Slow scale:  x1' = x2/eps,  x2' = (s x2 - f(x1) + y - p)/(eps delta),  y' = (x1 - y)/s
/// Fast scale is the slow scale multiplied by eps; with eps = 0 it degenerates
/// to the layer equations (y' = 0).
inline State fhn_rhs(const State& x, const Params& prm, TimeScale scale) {
    const double f = cubic_f(x[0], prm.alpha_cubic);
    const double g2 = (prm.s * x[1] - f + x[2] - prm.p) / prm.delta;
    const double g3 = (x[0] - x[2]) / prm.s;
    if (scale == TimeScale::Fast)
        return State(x[1], g2, prm.eps * g3);
    if (prm.eps == 0.0) throw Error("fhn_rhs: slow scale undefined at eps = 0");
    return State(x[1] / prm.eps, g2 / prm.eps, g3);
}

/// Analytic Jacobian of fhn_rhs at the same scale.
inline Mat3 fhn_jacobian(const State& x, const Params& prm, TimeScale scale) {
    const double dfdx = cubic_df(x[0], prm.alpha_cubic);
    Mat3 j;
    j << 0.0, 1.0, 0.0,
        -dfdx / prm.delta, prm.s / prm.delta, 1.0 / prm.delta,
        prm.eps / prm.s, 0.0, -prm.eps / prm.s;
    if (scale == TimeScale::Slow) {
        if (prm.eps == 0.0) throw Error("fhn_jacobian: slow scale undefined at eps = 0");
        j /= prm.eps;
    }
    return j;
}

enum class Branch { Left, Middle, Right, FoldLo, FoldHi };

/// Fold abscissas x1,- < x1,+ where f'(x1) = 0, by the quadratic formula.
inline std::pair<double, double> fold_points(double alpha) {
    // f'(x) = -3 x^2 + 2(1+alpha) x - alpha
    const double a = -3.0, b = 2.0 * (1.0 + alpha), c = -alpha;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) throw NoRealFolds();
    const double sq = std::sqrt(disc);
    // numerically stable quadratic roots
    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    double r1 = q / a, r2 = c / q;
    if (r1 > r2) std::swap(r1, r2);
    return {r1, r2};
}

/// Critical manifold C_0 = { x2 = 0, y = f(x1) + p } with its folds.
struct CriticalManifoldInfo {
    double fold_lo = 0.0;
    double fold_hi = 0.0;
    double alpha = 0.1;
    double fold_tol = 1e-9;

    Branch classify(double x1) const {
        if (std::abs(x1 - fold_lo) <= fold_tol) return Branch::FoldLo;
        if (std::abs(x1 - fold_hi) <= fold_tol) return Branch::FoldHi;
        if (x1 < fold_lo) return Branch::Left;
        if (x1 > fold_hi) return Branch::Right;
        return Branch::Middle;
    }
};

inline CriticalManifoldInfo critical_manifold(const Params& prm) {
    auto [lo, hi] = fold_points(prm.alpha_cubic);
    return CriticalManifoldInfo{lo, hi, prm.alpha_cubic};
}

/// y-level of the critical manifold over x1.
inline double critical_y(double x1, const Params& prm) {
    return cubic_f(x1, prm.alpha_cubic) + prm.p;
}

namespace detail {

/// Bracketed bisection to width `width`, then Newton polish.
template <class F, class DF>
double bisect_newton(F&& f, DF&& df, double lo, double hi, double width = 1e-14) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw NoSignChange("bisect_newton bracket");
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) { lo = hi = mid; break; }
        if (flo * fm < 0.0) { hi = mid; fhi = fm; } else { lo = mid; flo = fm; }
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        const double d = df(x);
        if (d == 0.0) break;
        const double step = f(x) / d;
        const double xn = x - step;
        if (xn < lo || xn > hi) break;
        x = xn;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

}  // namespace detail

/// x1 on a given branch of C_0 at level y, solving f(x1) + p = y.
/// f is monotone on each branch, so a bracket is immediate.
inline double critical_x1(double y, Branch branch, const Params& prm) {
    const auto cm = critical_manifold(prm);
    const double target = y - prm.p;
    auto g = [&](double x) { return cubic_f(x, prm.alpha_cubic) - target; };
    auto dg = [&](double x) { return cubic_df(x, prm.alpha_cubic); };
    double lo, hi;
    switch (branch) {
        case Branch::Left: lo = -4.0; hi = cm.fold_lo; break;
        case Branch::Middle: lo = cm.fold_lo; hi = cm.fold_hi; break;
        case Branch::Right: lo = cm.fold_hi; hi = 4.0; break;
        default: throw OutOfRange("critical_x1: branch must be Left/Middle/Right");
    }
    if (g(lo) * g(hi) > 0.0)
        throw OutOfRange("critical_x1: y level not attained on this branch");
    return detail::bisect_newton(g, dg, lo, hi);
}

/// Unique equilibrium q: x2 = 0, y = x1, with x1 - f(x1) - p = 0.
/// The cubic x^3 - (1+alpha)x^2 + (1+alpha)x - p is strictly increasing for
/// alpha in (-1, 2), which guarantees uniqueness there.
inline State equilibrium(const Params& prm) {
    prm.validate();
    const double a = prm.alpha_cubic;
    auto g = [&](double x) { return x - cubic_f(x, a) - prm.p; };
    auto dg = [&](double x) { return 1.0 - cubic_df(x, a); };
    const double span = 2.0 + std::abs(prm.p);
    if (!(a > -1.0 && a < 2.0)) {
        // outside the monotone range: scan for multiple sign changes
        int crossings = 0;
        double prev = g(-span);
        for (int i = 1; i <= 400; ++i) {
            const double x = -span + 2.0 * span * i / 400.0;
            const double cur = g(x);
            if (prev * cur < 0.0) ++crossings;
            prev = cur;
        }
        if (crossings > 1) throw MultipleEquilibria();
    }
    const double x1 = detail::bisect_newton(g, dg, -span, span);
    return State(x1, 0.0, x1);
}

/// Singular Hopf limits p- < p+: parameter values at which q coincides with a
/// fold, p = x1 - f(x1) evaluated at the fold abscissas.
inline std::pair<double, double> singular_hopf_limits(double alpha) {
    auto [lo, hi] = fold_points(alpha);
    double plo = lo - cubic_f(lo, alpha);
    double phi = hi - cubic_f(hi, alpha);
    if (plo > phi) std::swap(plo, phi);
    return {plo, phi};
}

/// Jacobian of the fast (layer) subsystem in (x1, x2) at a point, y frozen.
inline Mat2 layer_jacobian(double x1, const Params& prm) {
    Mat2 j;
    j << 0.0, 1.0, -cubic_df(x1, prm.alpha_cubic) / prm.delta, prm.s / prm.delta;
    return j;
}

/// Saddle eigenframe of the layer subsystem: lambda_s < 0 < lambda_u with
/// unit eigenvectors (1, lambda)/|.|. Valid on C_l and C_r where f' < 0.
struct Eigenframe {
    State base = State::Zero();  ///< base point (x1, x2, y)
    Vec2 e_s = Vec2::Zero();
    Vec2 e_u = Vec2::Zero();
    double lambda_s = 0.0;
    double lambda_u = 0.0;
};

inline Eigenframe layer_saddle_frame(const State& base, const Params& prm) {
    const double tr = prm.s / prm.delta;
    const double det = cubic_df(base[0], prm.alpha_cubic) / prm.delta;
    const double disc = tr * tr - 4.0 * det;
    if (disc <= 0.0 || det >= 0.0)
        throw Error("layer_saddle_frame: layer equilibrium is not a saddle here");
    const double sq = std::sqrt(disc);
    Eigenframe fr;
    fr.base = base;
    fr.lambda_u = 0.5 * (tr + sq);
    fr.lambda_s = 0.5 * (tr - sq);
    fr.e_u = Vec2(1.0, fr.lambda_u).normalized();
    fr.e_s = Vec2(1.0, fr.lambda_s).normalized();
    return fr;
}

/// Complex fast eigenvalues of the layer subsystem (used on the middle branch,
/// where both have positive real part).
inline std::pair<std::complex<double>, std::complex<double>>
layer_eigenvalues(double x1, const Params& prm) {
    const double tr = prm.s / prm.delta;
    const double det = cubic_df(x1, prm.alpha_cubic) / prm.delta;
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        return {std::complex<double>(0.5 * (tr - sq), 0.0),
                std::complex<double>(0.5 * (tr + sq), 0.0)};
    }
    const double im = 0.5 * std::sqrt(-disc);
    return {std::complex<double>(0.5 * tr, -im), std::complex<double>(0.5 * tr, im)};
}

}  // namespace fhn
