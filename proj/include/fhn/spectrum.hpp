#pragma once

#include "fhn/model.hpp"

#include <array>
#include <complex>

namespace fhn {

/// Roots of the monic cubic x^3 + b x^2 + c x + d, closed form plus Newton
/// polish. Returns the number of real roots (1 or 3); roots[0] is always the
/// real root farthest from the remaining pair, and when n_real == 1 the pair
/// is (roots[1] +- i*imag).
struct CubicRoots {
    int n_real = 0;
    std::array<double, 3> roots{};  // real parts
    double imag = 0.0;              // imaginary part of the pair when n_real == 1
};

inline CubicRoots solve_monic_cubic(double b, double c, double d,
                                    double imag_threshold = 1e-12) {
    auto poly = [&](double x) { return ((x + b) * x + c) * x + d; };
    auto dpoly = [&](double x) { return (3.0 * x + 2.0 * b) * x + c; };
    // depressed cubic t^3 + p t + q, x = t - b/3
    const double shift = b / 3.0;
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double disc = -4.0 * p * p * p - 27.0 * q * q;

    auto polish = [&](double x) {
        for (int it = 0; it < 3; ++it) {
            const double dp = dpoly(x);
            if (dp == 0.0) break;
            x -= poly(x) / dp;
        }
        return x;
    };

    CubicRoots out;
    if (disc > 0.0) {
        // three distinct real roots, trigonometric form
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        std::array<double, 3> t{};
        for (int k = 0; k < 3; ++k)
            t[k] = m * std::cos(phi - 2.0 * M_PI * k / 3.0) - shift;
        for (auto& x : t) x = polish(x);
        std::sort(t.begin(), t.end());
        out.n_real = 3;
        out.roots = t;
        return out;
    }
    // one real root (Cardano), then deflate
    double t0;
    if (p == 0.0 && q == 0.0) {
        t0 = 0.0;
    } else {
        const double h = std::sqrt(std::max(0.0, q * q / 4.0 + p * p * p / 27.0));
        const double u = std::cbrt(-q / 2.0 + (q >= 0.0 ? -h : h));
        t0 = (u == 0.0) ? 0.0 : u - p / (3.0 * u);
    }
    double x0 = polish(t0 - shift);
    // deflated quadratic x^2 + beta x + gamma
    const double beta = b + x0;
    const double gamma = c + x0 * beta;
    const double qdisc = beta * beta - 4.0 * gamma;
    if (qdisc >= 0.0 || std::sqrt(std::max(0.0, -qdisc)) * 0.5 <= imag_threshold) {
        // pair is (numerically) real after all
        const double sq = std::sqrt(std::max(0.0, qdisc));
        std::array<double, 3> t{x0, polish(0.5 * (-beta - sq)), polish(0.5 * (-beta + sq))};
        std::sort(t.begin(), t.end());
        out.n_real = 3;
        out.roots = t;
        return out;
    }
    out.n_real = 1;
    out.roots[0] = x0;
    out.roots[1] = -0.5 * beta;
    out.imag = 0.5 * std::sqrt(-qdisc);
    return out;
}

/// Spectrum of the linearization at the equilibrium q in a chosen time scale,
/// split into the real eigenvalue and the complex pair, together with the
/// real frame (real eigenvector, Re v, Im v) that brings the Jacobian to
/// block form: one 1x1 block and one 2x2 rotation block.
struct EigenData {
    double real_eig = 0.0;
    double pair_re = 0.0;
    double pair_im = 0.0;  ///< > 0 when has_complex_pair
    bool has_complex_pair = false;
    Mat3 frame = Mat3::Identity();          ///< columns: v_real, Re v, Im v
    std::array<double, 3> all_real{};       ///< filled when no pair exists
};

namespace detail {

inline Eigen::Vector3cd null_direction(const Eigen::Matrix3cd& m) {
    // rank-2 matrix: the null direction is the largest cross product of rows
    Eigen::Vector3cd best = Eigen::Vector3cd::Zero();
    double best_norm = -1.0;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const Eigen::Vector3cd a = m.row(i), bb = m.row(j);
        Eigen::Vector3cd cr;
        cr[0] = a[1] * bb[2] - a[2] * bb[1];
        cr[1] = a[2] * bb[0] - a[0] * bb[2];
        cr[2] = a[0] * bb[1] - a[1] * bb[0];
        const double n = cr.norm();
        if (n > best_norm) { best_norm = n; best = cr; }
    }
    return best;
}

}  // namespace detail

/// Characteristic-polynomial coefficients of a 3x3 matrix:
/// lambda^3 - tr*lambda^2 + m2*lambda - det.
struct CharCoeffs {
    double tr, m2, det;
};

inline CharCoeffs char_coeffs(const Mat3& j) {
    const double tr = j.trace();
    const double m2 = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0) + j(0, 0) * j(2, 2) -
                      j(0, 2) * j(2, 0) + j(1, 1) * j(2, 2) - j(1, 2) * j(2, 1);
    return {tr, m2, j.determinant()};
}

/// Eigen decomposition of the slow-scale Jacobian at q via the
/// characteristic cubic (closed form + Newton).
inline EigenData eigen_analysis(const Params& prm) {
    const State q = equilibrium(prm);
    const Mat3 j = fhn_jacobian(q, prm, TimeScale::Slow);
    const auto [tr, m2, det] = char_coeffs(j);
    // scale eigenvalues for conditioning: entries are O(1/eps)
    const double scale = std::max({std::abs(tr), std::sqrt(std::abs(m2)),
                                   std::cbrt(std::abs(det)), 1.0});
    const auto cr = solve_monic_cubic(-tr / scale, m2 / (scale * scale),
                                      -det / (scale * scale * scale),
                                      1e-12 / scale);
    EigenData out;
    if (cr.n_real == 3) {
        out.has_complex_pair = false;
        for (int k = 0; k < 3; ++k) out.all_real[k] = cr.roots[k] * scale;
        out.real_eig = out.all_real[2];  // by convention: the largest
        Mat3 f;
        for (int k = 0; k < 3; ++k) {
            Eigen::Matrix3cd m = (j - out.all_real[k] * Mat3::Identity()).cast<std::complex<double>>();
            f.col(k) = detail::null_direction(m).real().normalized();
        }
        out.frame = f;
        return out;
    }
    out.has_complex_pair = true;
    out.real_eig = cr.roots[0] * scale;
    out.pair_re = cr.roots[1] * scale;
    out.pair_im = cr.imag * scale;
    // real eigenvector
    Eigen::Matrix3cd mr = (j - out.real_eig * Mat3::Identity()).cast<std::complex<double>>();
    const Eigen::Vector3d vr = detail::null_direction(mr).real().normalized();
    // complex eigenvector for pair_re + i pair_im
    Eigen::Matrix3cd mc = j.cast<std::complex<double>>();
    mc -= std::complex<double>(out.pair_re, out.pair_im) * Eigen::Matrix3cd::Identity();
    Eigen::Vector3cd vc = detail::null_direction(mc);
    vc /= vc.norm();
    Mat3 f;
    f.col(0) = vr;
    f.col(1) = vc.real();
    f.col(2) = vc.imag();
    out.frame = f;
    return out;
}

/// Block form reproduced by the frame: J*F = F*B with B = diag block
/// [real_eig] + [[re, im], [-im, re]].
inline Mat3 block_form(const EigenData& e) {
    Mat3 b = Mat3::Zero();
    if (e.has_complex_pair) {
        b(0, 0) = e.real_eig;
        b(1, 1) = e.pair_re;
        b(2, 2) = e.pair_re;
        b(1, 2) = e.pair_im;
        b(2, 1) = -e.pair_im;
    } else {
        for (int k = 0; k < 3; ++k) b(k, k) = e.all_real[k];
    }
    return b;
}

/// Shilnikov eigenvalue condition: |real eigenvalue| > |Re complex pair|.
inline bool shilnikov_condition(const EigenData& e) {
    if (!e.has_complex_pair) throw AllRealEigenvalues();
    return std::abs(e.real_eig) > std::abs(e.pair_re);
}

}  // namespace fhn
