#include "fhn/shilnikov.hpp"

#include <algorithm>
#include <cmath>

namespace fhn {

std::pair<double, double> f12_domain(const ShilnikovModelParams& m) {
    m.validate();
    return {std::exp(-2.0 * M_PI * m.beta / m.alpha_rot), 1.0};
}

ModelPoint f12(const ModelPoint& x, const ShilnikovModelParams& m, bool check_domain) {
    if (x.section != ModelPoint::Section::Sigma1)
        throw DomainViolation("f12 expects a Sigma1 point");
    const double v = x.a, w = x.b;
    if (check_domain) {
        if (!(w > 0.0 && w <= 1.0)) throw DomainViolation("f12: w must be in (0, 1]");
        const auto [vlo, vhi] = f12_domain(m);
        if (v != 0.0 && !(v >= vlo && v <= vhi))
            throw DomainViolation("f12: v outside [exp(-2 pi beta/alpha), 1]");
    }
    const double r = v * std::pow(w, m.beta / m.gamma);
    const double ang = -(m.alpha_rot / m.gamma) * std::log(w);
    return ModelPoint::sigma2(r * std::cos(ang), r * std::sin(ang));
}

ModelPoint f21(const ModelPoint& x, const ShilnikovModelParams& m, bool check_domain) {
    if (x.section != ModelPoint::Section::Sigma2)
        throw DomainViolation("f21 expects a Sigma2 point");
    const double u = x.a, v = x.b;
    if (check_domain) {
        if (!(u >= m.lambda1 && u <= m.lambda1 + 1.0 / m.rho))
            throw DomainViolation("f21: u outside [lambda1, lambda1 + 1/rho]");
        if (!(v >= -1.0 && v <= 1.0)) throw DomainViolation("f21: |v| > 1");
    }
    const double du = u - m.lambda1;
    const double w = m.sigma * v + m.lambda2 - m.rho * m.rho * du * du;
    const double vnew = m.rho * du + m.lambda3;
    return ModelPoint::sigma1(vnew, w);
}

ReturnOutcome return_map(const ModelPoint& x, const ShilnikovModelParams& m) {
    const ModelPoint mid = f12(x, m);
    const double u = mid.a, v = mid.b;
    if (!(u >= m.lambda1 && u <= m.lambda1 + 1.0 / m.rho && v >= -1.0 && v <= 1.0))
        return {true, mid};
    return {false, f21(mid, m, false)};
}

std::pair<double, double> homoclinic_parameters(const ShilnikovModelParams& m) {
    if (m.lambda2 < 0.0) throw NoHomoclinic();
    const double r = std::sqrt(m.lambda2) / m.rho;
    return {-r, r};
}

bool recurrence_check(const ShilnikovModelParams& m) {
    m.validate();
    return m.sigma + m.lambda2 > 0.0;
}

namespace {

// 2x2 Jacobian of the return map by analytic chain rule
struct ReturnJet {
    bool lost = true;
    Vec2 image = Vec2::Zero();
    Mat2 jac = Mat2::Zero();
};

ReturnJet return_jet(const Vec2& x, const ShilnikovModelParams& m) {
    ReturnJet out;
    const double v = x[0], w = x[1];
    if (!(w > 0.0)) return out;
    const double pw = std::pow(w, m.beta / m.gamma);
    const double ang = -(m.alpha_rot / m.gamma) * std::log(w);
    const double cs = std::cos(ang), sn = std::sin(ang);
    const double u2 = v * pw * cs, v2 = v * pw * sn;
    // d(u2, v2)/d(v, w)
    const double dpw_dw = (m.beta / m.gamma) * pw / w;
    const double dang_dw = -(m.alpha_rot / m.gamma) / w;
    Mat2 j12;
    j12(0, 0) = pw * cs;
    j12(0, 1) = v * (dpw_dw * cs - pw * sn * dang_dw);
    j12(1, 0) = pw * sn;
    j12(1, 1) = v * (dpw_dw * sn + pw * cs * dang_dw);
    if (!(u2 >= m.lambda1 && u2 <= m.lambda1 + 1.0 / m.rho && v2 >= -1.0 && v2 <= 1.0))
        return out;
    const double du = u2 - m.lambda1;
    out.lost = false;
    out.image = Vec2(m.rho * du + m.lambda3,
                     m.sigma * v2 + m.lambda2 - m.rho * m.rho * du * du);
    Mat2 j21;  // d(vnew, wnew)/d(u2, v2)
    j21(0, 0) = m.rho;
    j21(0, 1) = 0.0;
    j21(1, 0) = -2.0 * m.rho * m.rho * du;
    j21(1, 1) = m.sigma;
    out.jac = j21 * j12;
    return out;
}

}  // namespace

std::vector<PeriodicPoint> find_periodic_points(const ShilnikovModelParams& m,
                                                int max_period, int grid) {
    if (!recurrence_check(m)) return {};
    const auto [vlo, vhi] = f12_domain(m);
    const double wmax = std::min(1.0, m.sigma + m.lambda2);
    if (!(wmax > 0.0)) return {};

    std::vector<PeriodicPoint> found;
    auto record = [&](int period, Vec2 x) {
        // Newton polish on return_map^period - id
        for (int it = 0; it < 60; ++it) {
            Vec2 y = x;
            Mat2 jac = Mat2::Identity();
            bool ok = true;
            for (int k = 0; k < period; ++k) {
                const ReturnJet jet = return_jet(y, m);
                if (jet.lost) { ok = false; break; }
                jac = jet.jac * jac;
                y = jet.image;
            }
            if (!ok) return;
            const Vec2 r = y - x;
            if (r.norm() <= 1e-12) {
                // dedup by orbit-point proximity
                for (const auto& q : found) {
                    Vec2 z(q.v, q.w);
                    for (int k = 0; k < period; ++k) {
                        if ((z - x).norm() <= 1e-6) return;
                        const ReturnJet jet = return_jet(z, m);
                        if (jet.lost) break;
                        z = jet.image;
                    }
                }
                // reject points whose exact period divides `period`
                for (int d = 1; d < period; ++d) {
                    if (period % d != 0) continue;
                    Vec2 z = x;
                    bool lost = false;
                    for (int k = 0; k < d; ++k) {
                        const ReturnJet jet = return_jet(z, m);
                        if (jet.lost) { lost = true; break; }
                        z = jet.image;
                    }
                    if (!lost && (z - x).norm() <= 1e-9) return;
                }
                found.push_back({period, x[0], x[1], r.norm()});
                return;
            }
            const Mat2 a = jac - Mat2::Identity();
            const Vec2 step = a.partialPivLu().solve(-r);
            if (!step.allFinite() || step.norm() > 1.0) return;
            x += step;
            if (!(x[1] > 0.0)) return;
        }
    };

    for (int period = 1; period <= max_period; ++period) {
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                Vec2 x(vlo + (vhi - vlo) * (i + 0.5) / grid,
                       wmax * (j + 0.5) / grid);
                Vec2 y = x;
                bool ok = true;
                for (int k = 0; k < period; ++k) {
                    const ReturnJet jet = return_jet(y, m);
                    if (jet.lost) { ok = false; break; }
                    y = jet.image;
                }
                if (ok && (y - x).norm() <= 1e-3) record(period, x);
            }
        }
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        if (a.period != b.period) return a.period < b.period;
        if (a.v != b.v) return a.v < b.v;
        return a.w < b.w;
    });
    return found;
}

ShilnikovModelParams calibrate_from_fhn(const Params& prm) {
    const EigenData e = eigen_analysis(prm);
    if (!e.has_complex_pair) throw AllRealEigenvalues();
    if (!(e.pair_re < 0.0 && e.real_eig > 0.0))
        throw Error("calibrate_from_fhn: expected stable pair and unstable real eigenvalue");
    ShilnikovModelParams m;
    m.beta = -e.pair_re;
    m.alpha_rot = std::abs(e.pair_im);
    m.gamma = e.real_eig;
    return m;
}

}  // namespace fhn
