#include <doctest.h>

#include "fhn/spectrum.hpp"

using namespace fhn;

namespace {

Params reference_params() {
    Params prm;
    prm.p = 0.05;
    prm.s = 1.37;
    prm.eps = 1e-2;
    return prm;
}

// independent sign-scan oracle for stationary points of the cubic
std::vector<double> fold_sign_scan(double alpha) {
    std::vector<double> roots;
    const int n = 40000;
    const double a = -4.0 - std::abs(alpha), b = 4.0 + std::abs(alpha);
    double prev = cubic_df(a, alpha);
    for (int i = 1; i <= n; ++i) {
        const double x = a + (b - a) * i / n;
        const double cur = cubic_df(x, alpha);
        if (prev * cur < 0.0) {
            double lo = x - (b - a) / n, hi = x;
            for (int k = 0; k < 80; ++k) {
                const double mid = 0.5 * (lo + hi);
                (cubic_df(lo, alpha) * cubic_df(mid, alpha) <= 0.0 ? hi : lo) = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }
    return roots;
}

}  // namespace

TEST_CASE("cubic f roots and direct values") {
    CHECK(cubic_f(0.0, 0.1) == 0.0);
    CHECK(cubic_f(1.0, 0.1) == 0.0);
    CHECK(cubic_f(0.1, 0.1) == 0.0);
    // 0.5 * (-0.5) * (-0.4) = 0.1
    CHECK(cubic_f(0.5, 0.1) == doctest::Approx(0.1).epsilon(1e-15));
    for (double a : {-0.3, 0.1, 0.7}) {
        CHECK(cubic_f(0.0, a) == 0.0);
        CHECK(cubic_f(1.0, a) == 0.0);
        CHECK(std::abs(cubic_f(a, a)) < 1e-18);
    }
}

TEST_CASE("fhn_rhs values and scale relation") {
    Params prm;
    prm.p = 0.0;
    prm.s = 1.0;
    prm.eps = 1e-2;
    const State origin(0.0, 0.0, 0.0);
    CHECK(fhn_rhs(origin, prm, TimeScale::Slow).norm() == 0.0);

    // critical-manifold point (alpha, 0, p): fast components vanish
    Params prm2 = prm.with_p(0.05);
    const State cmpt(0.1, 0.0, 0.05);
    const State rf = fhn_rhs(cmpt, prm2, TimeScale::Fast);
    CHECK(rf[0] == 0.0);
    CHECK(std::abs(rf[1]) < 1e-16);
    CHECK(rf[2] == doctest::Approx(1e-2 * (0.1 - 0.05) / 1.0).epsilon(1e-14));

    // direct substitution
    Params prm3;
    prm3.p = 0.05;
    prm3.s = 1.37;
    prm3.eps = 1e-2;
    const State x(0.5, 0.1, 0.2);
    const State r = fhn_rhs(x, prm3, TimeScale::Slow);
    CHECK(r[0] == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(3.74).epsilon(1e-12));
    CHECK(r[2] == doctest::Approx(0.3 / 1.37).epsilon(1e-14));

    // slow = fast / eps componentwise
    for (double x1 : {-0.3, 0.2, 0.9}) {
        const State xx(x1, 0.05, 0.11);
        const State slow = fhn_rhs(xx, prm3, TimeScale::Slow);
        const State fast = fhn_rhs(xx, prm3, TimeScale::Fast);
        CHECK((fast - prm3.eps * slow).norm() < 1e-15 * fast.norm());
    }

    CHECK_THROWS_AS(fhn_rhs(x, prm3.with_eps(0.0), TimeScale::Slow), Error);
    // layer equations at eps = 0 on the fast scale
    const State layer = fhn_rhs(x, prm3.with_eps(0.0), TimeScale::Fast);
    CHECK(layer[2] == 0.0);
}

TEST_CASE("fhn_jacobian: analytic entries and finite differences") {
    Params prm;
    prm.p = 0.05;
    prm.s = 1.37;
    prm.eps = 1e-2;
    const State x = equilibrium(prm);
    const Mat3 j = fhn_jacobian(x, prm, TimeScale::Slow);
    CHECK(j(0, 1) == doctest::Approx(1.0 / prm.eps).epsilon(1e-15));
    CHECK(j(2, 2) == doctest::Approx(-1.0 / prm.s).epsilon(1e-15));

    // central finite differences
    const double h = 1e-7;
    for (int c = 0; c < 3; ++c) {
        State e = State::Zero();
        e[c] = h;
        const State dplus = fhn_rhs(x + e, prm, TimeScale::Slow);
        const State dminus = fhn_rhs(x - e, prm, TimeScale::Slow);
        const State col = (dplus - dminus) / (2.0 * h);
        for (int r = 0; r < 3; ++r) {
            const double scale = std::max(1.0, std::abs(j(r, c)));
            CHECK(std::abs(col[r] - j(r, c)) / scale < 1e-6);
        }
    }
}

TEST_CASE("fold points against quadratic formula and sign scan") {
    const auto [lo, hi] = fold_points(0.1);
    CHECK(lo == doctest::Approx(0.0486869).epsilon(1e-6));
    CHECK(hi == doctest::Approx(0.6846464).epsilon(1e-6));
    CHECK(std::abs(cubic_df(lo, 0.1)) < 1e-12);
    CHECK(std::abs(cubic_df(hi, 0.1)) < 1e-12);
    // sign change of f' across each root
    CHECK(cubic_df(lo - 1e-4, 0.1) * cubic_df(lo + 1e-4, 0.1) < 0.0);
    CHECK(cubic_df(hi - 1e-4, 0.1) * cubic_df(hi + 1e-4, 0.1) < 0.0);

    const auto scan = fold_sign_scan(0.1);
    REQUIRE(scan.size() == 2);
    CHECK(lo == doctest::Approx(scan[0]).epsilon(1e-10));
    CHECK(hi == doctest::Approx(scan[1]).epsilon(1e-10));

    // alpha = 10: discriminant decides; cross-check against the scan
    const double a10 = 10.0;
    const double disc = 4.0 * (1.0 + a10) * (1.0 + a10) - 12.0 * a10;
    const auto scan10 = fold_sign_scan(a10);
    if (disc < 0.0) {
        CHECK_THROWS_AS(fold_points(a10), NoRealFolds);
        CHECK(scan10.empty());
    } else {
        const auto [l2, h2] = fold_points(a10);
        REQUIRE(scan10.size() == 2);
        CHECK(l2 == doctest::Approx(scan10[0]).epsilon(1e-8));
        CHECK(h2 == doctest::Approx(scan10[1]).epsilon(1e-8));
    }
}

TEST_CASE("equilibrium: values, residuals, uniqueness scan") {
    CHECK(equilibrium(Params{.p = 0.0}).norm() == 0.0);
    const State q = equilibrium(reference_params());
    CHECK(q[0] == doctest::Approx(0.04762).epsilon(1e-4));
    CHECK(q[1] == 0.0);
    CHECK(q[2] == q[0]);
    for (double p : {0.01, 0.06, 0.1}) {
        const State qq = equilibrium(Params{.p = p});
        CHECK(std::abs(qq[0] - cubic_f(qq[0], 0.1) - p) <= 1e-12);
    }
    // uniqueness over a dense p scan: the equilibrium cubic has one sign change
    auto sgn = [](double v) { return v >= 0.0 ? 1 : -1; };
    for (int i = 0; i <= 100; ++i) {
        const double p = -1.0 + 2.0 * i / 100.0;
        int crossings = 0;
        double prev = -2.0 - cubic_f(-2.0, 0.1) - p;
        for (int k = 1; k <= 1999; ++k) {
            const double x = -2.0 + 4.0 * k / 1999.0;
            const double cur = x - cubic_f(x, 0.1) - p;
            if (sgn(prev) != sgn(cur)) ++crossings;
            prev = cur;
        }
        CHECK(crossings == 1);
    }
}

TEST_CASE("singular Hopf limits") {
    const auto [plo, phi] = singular_hopf_limits(0.1);
    CHECK(plo == doctest::Approx(0.0510635).epsilon(1e-5));
    CHECK(phi == doctest::Approx(0.558416).epsilon(1e-5));
    CHECK(plo < phi);
    // defining property: equilibrium at p_lo sits on the fold
    const auto [flo, fhi] = fold_points(0.1);
    const State q = equilibrium(Params{.p = plo});
    CHECK(std::abs(q[0] - flo) < 1e-10);
    const State q2 = equilibrium(Params{.p = phi});
    CHECK(std::abs(q2[0] - fhi) < 1e-10);
}

TEST_CASE("eigen_analysis: trace identity, block residual, Shilnikov condition") {
    Params prm;
    prm.p = 0.05;
    prm.s = 1.3254;
    prm.eps = 1e-2;
    const EigenData e = eigen_analysis(prm);
    REQUIRE(e.has_complex_pair);

    const State q = equilibrium(prm);
    const Mat3 j = fhn_jacobian(q, prm, TimeScale::Slow);
    const double tr = j.trace();
    const double sum = e.real_eig + 2.0 * e.pair_re;
    CHECK(std::abs(tr - sum) / std::abs(tr) < 1e-10);

    // block structure: J * F = F * B
    const Mat3 res = j * e.frame - e.frame * block_form(e);
    CHECK(res.cwiseAbs().maxCoeff() < 1e-8 * j.cwiseAbs().maxCoeff());

    // |real| > |Re pair| in region I
    CHECK(std::abs(e.real_eig) > std::abs(e.pair_re));
    CHECK(shilnikov_condition(e));
}

TEST_CASE("shilnikov_condition on constructed spectra") {
    EigenData e;
    e.has_complex_pair = true;
    e.real_eig = -2.0;
    e.pair_re = -0.1;
    e.pair_im = 1.0;
    CHECK(shilnikov_condition(e));
    e.real_eig = -0.05;
    CHECK(!shilnikov_condition(e));
    e.has_complex_pair = false;
    CHECK_THROWS_AS(shilnikov_condition(e), AllRealEigenvalues);
}

TEST_CASE("characteristic degree-one coefficient is O(eps) on the Hopf locus") {
    // evaluated on the Hopf locus (where the paper's scaling claim lives):
    // the coefficient is linear in eps there, ratio ~ 10 across a decade
    Params base;
    base.s = 1.3;
    auto coeff_at_hopf = [&](double eps) {
        Params prm = base.with_eps(eps);
        // local bisection for the Hopf p at this eps
        auto re_pair = [&](double p) {
            return eigen_analysis(prm.with_p(p)).pair_re;
        };
        double lo = 0.045, hi = 0.12;
        REQUIRE(re_pair(lo) < 0.0);
        REQUIRE(re_pair(hi) > 0.0);
        for (int k = 0; k < 60; ++k) {
            const double mid = 0.5 * (lo + hi);
            (re_pair(mid) < 0.0 ? lo : hi) = mid;
        }
        const double p = 0.5 * (lo + hi);
        const State q = equilibrium(prm.with_p(p));
        const Mat3 j = fhn_jacobian(q, prm.with_p(p), TimeScale::Fast);
        return char_coeffs(j).m2;
    };
    const double c2 = coeff_at_hopf(1e-2);
    const double c3 = coeff_at_hopf(1e-3);
    const double ratio = c2 / c3;
    CHECK(ratio > 5.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("imaginary part scaling |Im|/sqrt(eps) at the Hopf locus") {
    Params base;
    base.s = 1.3;
    auto im_at_hopf = [&](double eps) {
        Params prm = base.with_eps(eps);
        auto re_pair = [&](double p) { return eigen_analysis(prm.with_p(p)).pair_re; };
        double lo = 0.045, hi = 0.12;
        for (int k = 0; k < 60; ++k) {
            const double mid = 0.5 * (lo + hi);
            (re_pair(mid) < 0.0 ? lo : hi) = mid;
        }
        const EigenData e = eigen_analysis(prm.with_p(0.5 * (lo + hi)));
        return e.pair_im * eps;  // fast-scale imaginary part
    };
    std::vector<double> ratios;
    for (double eps : {1e-2, 1e-3, 1e-4})
        ratios.push_back(im_at_hopf(eps) / std::sqrt(eps));
    for (double r : ratios) {
        CHECK(r < 2.0 * ratios[0]);
        CHECK(r > 0.5 * ratios[0]);
    }
}

TEST_CASE("critical manifold classification and branch solve") {
    Params prm;
    prm.p = 0.05;
    const auto cm = critical_manifold(prm);
    CHECK(cm.classify(0.0) == Branch::Left);
    CHECK(cm.classify(0.3) == Branch::Middle);
    CHECK(cm.classify(0.9) == Branch::Right);
    CHECK(cm.classify(cm.fold_lo) == Branch::FoldLo);
    CHECK(cm.classify(cm.fold_hi) == Branch::FoldHi);

    const double x1 = critical_x1(0.09, Branch::Left, prm);
    CHECK(x1 < cm.fold_lo);
    CHECK(std::abs(critical_y(x1, prm) - 0.09) < 1e-12);
}

TEST_CASE("layer frames: saddle on outer branches, unstable on the middle") {
    Params prm;
    prm.p = 0.05;
    prm.s = 1.37;
    const auto cm = critical_manifold(prm);
    for (double y : {0.07, 0.09, 0.11}) {
        const double x1 = critical_x1(y, Branch::Left, prm);
        const auto fr = layer_saddle_frame(State(x1, 0.0, y), prm);
        CHECK(fr.lambda_s < 0.0);
        CHECK(fr.lambda_u > 0.0);
        // eigenvector residuals
        const Mat2 j = layer_jacobian(x1, prm);
        CHECK((j * fr.e_s - fr.lambda_s * fr.e_s).norm() < 1e-10);
        CHECK((j * fr.e_u - fr.lambda_u * fr.e_u).norm() < 1e-10);
    }
    for (int i = 1; i < 10; ++i) {
        const double x1 = cm.fold_lo + (cm.fold_hi - cm.fold_lo) * i / 10.0;
        const auto [l1, l2] = layer_eigenvalues(x1, prm);
        CHECK(l1.real() > 0.0);
        CHECK(l2.real() > 0.0);
    }
}

TEST_CASE("cubic eigenvalue solver agrees with direct evaluation") {
    // roots of (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
    const auto r = solve_monic_cubic(-6.0, 11.0, -6.0);
    REQUIRE(r.n_real == 3);
    CHECK(r.roots[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.roots[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.roots[2] == doctest::Approx(3.0).epsilon(1e-12));
    // (x-2)(x^2+1) = x^3 - 2x^2 + x - 2
    const auto c = solve_monic_cubic(-2.0, 1.0, -2.0);
    REQUIRE(c.n_real == 1);
    CHECK(c.roots[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c.roots[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.imag == doctest::Approx(1.0).epsilon(1e-12));
}
