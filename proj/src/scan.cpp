#include "fhn/scan.hpp"

#include "fhn/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <mutex>

namespace fhn {

namespace {

struct SeedBasis {
    State q;
    State u1, u2;  ///< orthonormal basis of the W^s(q) tangent plane
    State wu_dir;  ///< unit real eigenvector, oriented toward increasing x1
};

SeedBasis ws_seed_basis(const Params& prm) {
    const EigenData e = eigen_analysis(prm);
    if (!e.has_complex_pair) throw AllRealEigenvalues();
    SeedBasis b;
    b.q = equilibrium(prm);
    State vr = e.frame.col(1), vi = e.frame.col(2);
    vr.normalize();
    vi -= vr * vi.dot(vr);
    vi.normalize();
    b.u1 = vr;
    b.u2 = vi;
    State w = e.frame.col(0);
    if (w[0] < 0.0) w = -w;
    b.wu_dir = w.normalized();
    return b;
}

}  // namespace

SectionTrace ws_trace(const Params& prm, double y_section, int n_seeds,
                      double seed_radius, const IntegratorConfig& cfg) {
    if (!(seed_radius > 0.0)) throw OutOfRange("ws_trace: seed_radius must be > 0");
    if (n_seeds < 1) throw OutOfRange("ws_trace: n_seeds must be >= 1");
    const SeedBasis b = ws_seed_basis(prm);
    SectionTrace out;
    out.provenance = SectionTrace::Provenance::StableManifoldOfQ;
    out.y_section = y_section;
    std::vector<std::optional<Vec2>> hits(n_seeds);
    std::vector<double> angles(n_seeds);
    for (int k = 0; k < n_seeds; ++k)
        angles[k] = 2.0 * M_PI * k / n_seeds;
    parallel_for(n_seeds, 1, [&](std::size_t k) {
        const State seed = b.q + seed_radius * (std::cos(angles[k]) * b.u1 +
                                                std::sin(angles[k]) * b.u2);
        const SectionOutcome so =
            integrate_to_section(prm, seed, Direction::Backward, y_section, cfg);
        if (so.kind == Termination::SectionHit)
            hits[k] = Vec2(so.event.state[0], so.event.state[1]);
    });
    for (int k = 0; k < n_seeds; ++k) {
        if (hits[k]) {
            out.seed_param.push_back(angles[k]);
            out.points.push_back(*hits[k]);
        } else {
            ++out.escaped;
        }
    }
    if (out.points.empty()) throw EmptyTrace();
    return out;
}

std::pair<Trajectory, Trajectory> wu_branches(const Params& prm,
                                              const IntegratorConfig& cfg,
                                              double offset) {
    const EigenData e = eigen_analysis(prm);
    if (!(e.real_eig > 0.0))
        throw Error("wu_branches: real eigenvalue is not positive");
    const SeedBasis b = ws_seed_basis(prm);
    const State plus = b.q + offset * b.wu_dir;
    const State minus = b.q - offset * b.wu_dir;
    return {integrate_field(FhnField{prm, TimeScale::Slow}, plus, 0.0,
                            Direction::Forward, cfg),
            integrate_field(FhnField{prm, TimeScale::Slow}, minus, 0.0,
                            Direction::Forward, cfg)};
}

Vec2 frame_coords(const Vec2& x, const Eigenframe& frame) {
    Mat2 m;
    m.col(0) = frame.e_u;
    m.col(1) = frame.e_s;
    const Vec2 d(x[0] - frame.base[0], x[1] - frame.base[1]);
    return m.partialPivLu().solve(d);
}

TurnPoint turn_point(const SectionTrace& trace, const Eigenframe& frame) {
    const std::size_t n = trace.points.size();
    if (n < 3) throw NoTurn();
    std::vector<double> xi(n), eta(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 c = frame_coords(trace.points[i], frame);
        xi[i] = c[0];
        eta[i] = c[1];
    }
    // interior extremum of xi along the ordered trace, strongest first
    std::size_t best = 0;
    double best_dev = -1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const bool is_min = xi[i] <= xi[i - 1] && xi[i] <= xi[i + 1];
        const bool is_max = xi[i] >= xi[i - 1] && xi[i] >= xi[i + 1];
        if (!is_min && !is_max) continue;
        const double dev = std::abs(xi[i - 1] - xi[i]) + std::abs(xi[i + 1] - xi[i]);
        if (dev > best_dev) { best_dev = dev; best = i; }
    }
    if (best_dev < 0.0) throw NoTurn();
    // quadratic refinement of xi as a function of eta through the three points
    const double e0 = eta[best - 1], e1 = eta[best], e2 = eta[best + 1];
    const double x0 = xi[best - 1], x1v = xi[best], x2v = xi[best + 1];
    double eta_t = e1, xi_t = x1v;
    const double d01 = e0 - e1, d12 = e1 - e2, d02 = e0 - e2;
    if (d01 != 0.0 && d12 != 0.0 && d02 != 0.0) {
        // Lagrange parabola xi(eta); vertex where derivative vanishes
        const double a = x0 / (d01 * d02) - x1v / (d01 * d12) + x2v / (d02 * d12);
        const double bq = -x0 * (e1 + e2) / (d01 * d02) + x1v * (e0 + e2) / (d01 * d12) -
                          x2v * (e0 + e1) / (d02 * d12);
        if (a != 0.0) {
            const double ev = -bq / (2.0 * a);
            if (ev >= std::min({e0, e1, e2}) && ev <= std::max({e0, e1, e2})) {
                eta_t = ev;
                const double c = x0 * e1 * e2 / (d01 * d02) - x1v * e0 * e2 / (d01 * d12) +
                                 x2v * e0 * e1 / (d02 * d12);
                xi_t = (a * ev + bq) * ev + c;
            }
        }
    }
    TurnPoint tp;
    tp.point = Vec2(xi_t, eta_t);
    tp.delta = xi_t;
    Mat2 m;
    m.col(0) = frame.e_u;
    m.col(1) = frame.e_s;
    const Vec2 d = m * tp.point;
    tp.section_point = Vec2(frame.base[0] + d[0], frame.base[1] + d[1]);
    return tp;
}

namespace {

/// The slow-manifold section frame at y_section, with the BVP y-range kept
/// clear of the left fold (the left branch only exists for y > p + f(x1,-)).
Eigenframe left_section_frame(const Params& prm, const TurnScanOptions& opt) {
    const auto cm = critical_manifold(prm);
    const double y_fold = critical_y(cm.fold_lo, prm);
    const double y_lo = std::max(opt.y_bvp_lo, y_fold + 0.0125);
    if (y_lo >= opt.y_section - 5e-3)
        throw FoldTooClose();
    BvpOptions bopt;
    bopt.n_nodes = 0;  // growth-bounded
    const SlowManifoldSegment seg =
        compute_saddle_slow_manifold(prm, Branch::Left, y_lo, opt.y_bvp_hi, bopt);
    return section_point(seg, opt.y_section).second;
}

struct ThetaEval {
    bool hit = false;
    double xi = 0.0, eta = 0.0;
};

struct TurnScanner {
    Params prm;
    TurnScanOptions opt;
    IntegratorConfig cfg;
    SeedBasis basis;
    Eigenframe frame;

    ThetaEval eval(double theta) const {
        const State seed = basis.q + opt.seed_radius * (std::cos(theta) * basis.u1 +
                                                        std::sin(theta) * basis.u2);
        const SectionOutcome so =
            integrate_to_section(prm, seed, Direction::Backward, opt.y_section, cfg);
        ThetaEval r;
        if (so.kind != Termination::SectionHit) return r;
        const Vec2 c = frame_coords(Vec2(so.event.state[0], so.event.state[1]), frame);
        r.hit = true;
        r.xi = c[0];
        r.eta = c[1];
        return r;
    }

    // eta at theta, +inf when the crossing misses the near-manifold band
    double eta_or_inf(double theta) const {
        const ThetaEval r = eval(theta);
        if (!r.hit || std::abs(r.xi) > opt.xi_band)
            return std::numeric_limits<double>::infinity();
        return r.eta;
    }
};

}  // namespace

double turn_offset_signed(const Params& prm, const TurnScanOptions& opt,
                          const IntegratorConfig& cfg, int threads) {
    TurnScanner sc{prm, opt, cfg, ws_seed_basis(prm), left_section_frame(prm, opt)};
    sc.cfg.max_time = opt.max_time;

    const int n = opt.n_seeds;
    std::vector<ThetaEval> coarse(n);
    parallel_for(n, threads, [&](std::size_t k) {
        coarse[k] = sc.eval(2.0 * M_PI * k / n);
    });

    auto near = [&](int k) {
        const auto& c = coarse[(k % n + n) % n];
        return c.hit && std::abs(c.xi) <= opt.xi_band;
    };

    double best = std::numeric_limits<double>::infinity();
    // contiguous near-band runs (dips), found with wraparound
    std::vector<std::pair<int, int>> dips;
    int k = 0;
    while (k < n) {
        if (!near(k)) { ++k; continue; }
        int e = k;
        while (e + 1 < n && near(e + 1)) ++e;
        dips.emplace_back(k, e);
        k = e + 1;
    }
    if (!dips.empty() && dips.front().first == 0 && dips.back().second == n - 1 &&
        dips.size() > 1) {
        dips.front().first = dips.back().first - n;  // merge across the wrap
        dips.pop_back();
    }
    if (dips.empty()) return best;

    const double dtheta = 2.0 * M_PI / n;
    std::mutex mtx;
    parallel_for(dips.size(), threads, [&](std::size_t di) {
        const auto [i0, i1] = dips[di];
        double local = std::numeric_limits<double>::infinity();
        for (int i = i0; i <= i1; ++i) {
            const auto& c = coarse[(i % n + n) % n];
            local = std::min(local, c.eta);
        }
        // refine the dip tip in theta: scan then golden-section on eta(theta)
        const double a = (i0 - 1) * dtheta, bnd = (i1 + 1) * dtheta;
        const int nsub = 3 * (i1 - i0 + 3);
        double tbest = 0.5 * (a + bnd), fbest = std::numeric_limits<double>::infinity();
        for (int j = 0; j <= nsub; ++j) {
            const double th = a + (bnd - a) * j / nsub;
            const double f = sc.eta_or_inf(th);
            if (f < fbest) { fbest = f; tbest = th; }
        }
        if (std::isfinite(fbest)) {
            double lo = tbest - (bnd - a) / nsub, hi = tbest + (bnd - a) / nsub;
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = sc.eta_or_inf(x1), f2 = sc.eta_or_inf(x2);
            for (int it = 0; it < opt.refine_iters; ++it) {
                if (f1 < f2) {
                    hi = x2; x2 = x1; f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = sc.eta_or_inf(x1);
                } else {
                    lo = x1; x1 = x2; f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = sc.eta_or_inf(x2);
                }
            }
            local = std::min({local, f1, f2, fbest});
        }
        std::lock_guard<std::mutex> lk(mtx);
        best = std::min(best, local);
    });
    return best;
}

namespace {

/// generic sign bisection on p; f must be negative at lo and positive at hi
template <class F>
std::pair<double, double> bisect_p(F&& f, double lo, double hi, double p_tol) {
    while (hi - lo > 2.0 * p_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0.0) lo = mid; else hi = mid;
    }
    return {0.5 * (lo + hi), 0.5 * (hi - lo)};
}

}  // namespace

double hopf_p(const Params& base, double s, double p_lo, double p_hi) {
    Params prm = base.with_s(s);
    const auto [pminus, pplus] = singular_hopf_limits(prm.alpha_cubic);
    if (p_lo < 0.0) p_lo = std::max(0.0, pminus - 0.02);
    if (p_hi < 0.0) p_hi = pminus + 0.08;
    auto re_pair = [&](double p) {
        const EigenData e = eigen_analysis(prm.with_p(p));
        if (!e.has_complex_pair) throw AllRealEigenvalues();
        return e.pair_re;
    };
    if (!(re_pair(p_lo) < 0.0 && re_pair(p_hi) > 0.0))
        throw NoSignChange("hopf_p bracket");
    double lo = p_lo, hi = p_hi;
    while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (re_pair(mid) < 0.0) lo = mid; else hi = mid;
        if (std::abs(re_pair(0.5 * (lo + hi))) <= 1e-10 && hi - lo < 1e-10) break;
    }
    return 0.5 * (lo + hi);
}

ParamCurve hopf_curve(const Params& base, const CurveScanOptions& opt) {
    ParamCurve curve;
    curve.kind = CurveKind::Hopf;
    curve.s.resize(opt.n);
    curve.p.resize(opt.n);
    curve.residual.resize(opt.n);
    parallel_for(opt.n, opt.threads, [&](std::size_t i) {
        const double s = opt.s_lo + (opt.s_hi - opt.s_lo) * double(i) / std::max(1, opt.n - 1);
        const double p = hopf_p(base, s);
        const EigenData e = eigen_analysis(base.with_s(s).with_p(p));
        curve.s[i] = s;
        curve.p[i] = p;
        curve.residual[i] = std::abs(e.pair_re);
    });
    return curve;
}

ParamCurve tangency_curve(const Params& base, const CurveScanOptions& opt,
                          const IntegratorConfig& cfg) {
    ParamCurve curve;
    curve.kind = CurveKind::Tangency;
    for (int i = 0; i < opt.n; ++i) {
        const double s = opt.s_lo + (opt.s_hi - opt.s_lo) * double(i) / std::max(1, opt.n - 1);
        const Params prm = base.with_s(s);
        const double ph = hopf_p(base, s);
        double lo = ph - 3.5 * prm.eps;
        double hi = ph - 0.25 * prm.eps;
        auto delta = [&](double p) {
            const double d = turn_offset_signed(prm.with_p(p), opt.turn, cfg, opt.threads);
            return std::isfinite(d) ? d : 1.0;
        };
        double dlo = delta(lo);
        int widen = 0;
        while (dlo >= 0.0 && widen++ < 4) { lo -= 2.0 * prm.eps; dlo = delta(lo); }
        double dhi = delta(hi);
        widen = 0;
        while (dhi < 0.0 && widen++ < 4 && hi < ph - 0.05 * prm.eps) {
            hi += 0.1 * prm.eps;
            dhi = delta(hi);
        }
        if (!(dlo < 0.0 && dhi >= 0.0)) {
            curve.skipped.push_back(i);
            continue;
        }
        const auto [p, half] = bisect_p(delta, lo, hi, opt.p_tol);
        curve.s.push_back(s);
        curve.p.push_back(p);
        curve.residual.push_back(half);
        curve.aux.push_back(delta(p));
    }
    return curve;
}

ParamCurve distance_contour(const Params& base, double level,
                            const CurveScanOptions& opt, const IntegratorConfig& cfg) {
    if (!(level > 0.0)) throw OutOfRange("distance_contour: level must be > 0");
    ParamCurve curve;
    curve.kind = CurveKind::DistanceContour;
    for (int i = 0; i < opt.n; ++i) {
        const double s = opt.s_lo + (opt.s_hi - opt.s_lo) * double(i) / std::max(1, opt.n - 1);
        const Params prm = base.with_s(s);
        const double ph = hopf_p(base, s);
        auto dist = [&](double p) -> double {
            const Params pp = prm.with_p(p);
            const Eigenframe fr = left_section_frame(pp, opt.turn);
            IntegratorConfig c2 = cfg;
            c2.max_time = opt.turn.max_time;
            try {
                const SectionTrace tr = ws_trace(pp, opt.turn.y_section, opt.turn.n_seeds,
                                                 opt.turn.seed_radius, c2);
                double d = std::numeric_limits<double>::infinity();
                for (const auto& pt : tr.points)
                    d = std::min(d, (pt - Vec2(fr.base[0], fr.base[1])).norm());
                return d;
            } catch (const EmptyTrace&) {
                return std::numeric_limits<double>::infinity();
            }
        };
        auto g = [&](double p) {
            const double d = dist(p);
            return std::isfinite(d) ? d - level : 1.0;
        };
        double lo = ph - 3.5 * prm.eps, hi = ph - 0.25 * prm.eps;
        double glo = g(lo), ghi = g(hi);
        int widen = 0;
        while (glo >= 0.0 && widen++ < 4) { lo -= 2.0 * prm.eps; glo = g(lo); }
        if (!(glo < 0.0 && ghi >= 0.0)) {
            curve.skipped.push_back(i);
            continue;
        }
        const auto [p, half] = bisect_p(g, lo, hi, opt.p_tol);
        const double gp = g(p);
        curve.s.push_back(s);
        curve.p.push_back(p);
        curve.residual.push_back(std::abs(gp));
        // side arrow: sign of d'(p)
        const double dp = 1e-5;
        curve.aux.push_back(g(p + dp) > gp ? 1.0 : -1.0);
    }
    return curve;
}

SplitSide splitting_classify(const Params& prm, const IntegratorConfig& cfg) {
    const SeedBasis b = ws_seed_basis(prm);
    const auto cm = critical_manifold(prm);
    const State seed = b.q + 1e-6 * b.wu_dir;
    bool armed = false;
    std::optional<SplitSide> side;
    auto obs = [&](double, const State& y, const State&, const DenseStep&,
                   bool) -> StepVerdict {
        if (!armed && y[0] > 0.5) armed = true;
        if (armed) {
            if (y[0] < cm.fold_lo - 0.1) { side = SplitSide::Left; return StepVerdict::Stop; }
            if (y[0] > 1.5) { side = SplitSide::Right; return StepVerdict::Stop; }
        }
        return StepVerdict::Continue;
    };
    drive(FhnField{prm, TimeScale::Slow}, 0.0, seed, Direction::Forward, cfg, obs);
    if (!side) throw NoConvergence("splitting_classify: no excursion classified");
    return *side;
}

ParamCurve splitting_curve(const Params& base, const CurveScanOptions& opt,
                           const IntegratorConfig& cfg) {
    ParamCurve curve;
    curve.kind = CurveKind::Splitting;
    std::vector<std::optional<std::array<double, 3>>> rows(opt.n);
    parallel_for(opt.n, opt.threads, [&](std::size_t i) {
        const double s = opt.s_lo + (opt.s_hi - opt.s_lo) * double(i) / std::max(1, opt.n - 1);
        const Params prm = base.with_s(s);
        // Left branch side = small p; Right escape = large p on the relevant bracket
        auto g = [&](double p) {
            return splitting_classify(prm.with_p(p), cfg) == SplitSide::Left ? -1.0 : 1.0;
        };
        double lo = 0.0, hi = 0.12;
        if (g(lo) >= 0.0 || g(hi) < 0.0) {
            std::swap(lo, hi);  // orientation flips on parts of the curve
            if (g(lo) >= 0.0 || g(hi) < 0.0) return;  // skipped
        }
        double a = lo, b2 = hi;
        while (std::abs(b2 - a) > 2.0 * opt.p_tol) {
            const double mid = 0.5 * (a + b2);
            if (mid == a || mid == b2) break;
            if (g(mid) < 0.0) a = mid; else b2 = mid;
        }
        rows[i] = std::array<double, 3>{s, 0.5 * (a + b2), 0.5 * std::abs(b2 - a)};
    });
    for (int i = 0; i < opt.n; ++i) {
        if (!rows[i]) { curve.skipped.push_back(i); continue; }
        curve.s.push_back((*rows[i])[0]);
        curve.p.push_back((*rows[i])[1]);
        curve.residual.push_back((*rows[i])[2]);
    }
    return curve;
}

namespace {

double point_segment_dist(const Vec2& x, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double L2 = ab.squaredNorm();
    if (L2 == 0.0) return (x - a).norm();
    const double t = std::clamp((x - a).dot(ab) / L2, 0.0, 1.0);
    return (x - (a + t * ab)).norm();
}

double polyline_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& x : a)
        for (std::size_t j = 0; j + 1 < b.size(); ++j)
            d = std::min(d, point_segment_dist(x, b[j], b[j + 1]));
    for (const auto& x : b)
        for (std::size_t j = 0; j + 1 < a.size(); ++j)
            d = std::min(d, point_segment_dist(x, a[j], a[j + 1]));
    return d;
}

}  // namespace

Table1Row tangency_hopf_distance(const Params& base, double eps,
                                 const CurveScanOptions& opt,
                                 const IntegratorConfig& cfg) {
    const Params prm = base.with_eps(eps);
    Table1Row row;
    row.eps = eps;
    row.tangency = tangency_curve(prm, opt, cfg);
    row.hopf = hopf_curve(prm, opt);
    if (row.tangency.p.empty()) throw NoConvergence("tangency curve empty");
    std::vector<Vec2> tanpts, hopfpts;
    for (std::size_t i = 0; i < row.tangency.p.size(); ++i)
        tanpts.emplace_back(row.tangency.p[i], row.tangency.s[i]);
    for (std::size_t i = 0; i < row.hopf.p.size(); ++i)
        hopfpts.emplace_back(row.hopf.p[i], row.hopf.s[i]);
    row.distance = polyline_distance(tanpts, hopfpts);
    row.ratio = row.distance / eps;
    // s at the closest tangency sample
    double dbest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tanpts.size(); ++i) {
        for (std::size_t j = 0; j + 1 < hopfpts.size(); ++j) {
            const double d = point_segment_dist(tanpts[i], hopfpts[j], hopfpts[j + 1]);
            if (d < dbest) { dbest = d; row.s_at_min = row.tangency.s[i]; }
        }
    }
    return row;
}

PeriodicOrbit find_limit_cycle_backward(const Params& prm, const IntegratorConfig& cfg,
                                        double seed_radius, double return_tol) {
    const SeedBasis b = ws_seed_basis(prm);
    const State seed = b.q + seed_radius * b.u1;
    const double ysec = seed[2];

    PeriodicOrbit orbit;
    State prev_hit = State::Zero();
    double prev_t = 0.0;
    int hits = 0;
    bool converged = false;
    double g_prev = 0.0;
    double t_prev = 0.0;
    bool have_prev = false;

    FhnField field{prm, TimeScale::Slow};
    auto obs = [&](double t, const State& y, const State&, const DenseStep& ds,
                   bool) -> StepVerdict {
        const double g_new = y[2] - ysec;
        if (have_prev && g_prev < 0.0 && g_new >= 0.0) {  // one crossing orientation
            double ta = t_prev, tb = t, ga = g_prev;
            for (int it = 0; it < 200 && std::abs(tb - ta) > 1e-15; ++it) {
                const double tm = 0.5 * (ta + tb);
                if (tm == ta || tm == tb) break;
                const double gm = ds.eval(tm)[2] - ysec;
                if (ga * gm < 0.0) tb = tm; else { ta = tm; ga = gm; }
            }
            const double tc = 0.5 * (ta + tb);
            const State xc = ds.eval(tc);
            if (hits > 0) {
                const double d = (xc - prev_hit).norm();
                if (d <= return_tol && hits >= 3) {
                    orbit.period = std::abs(tc - prev_t);
                    orbit.point = xc;
                    orbit.recurrence_residual = d;
                    converged = true;
                    return StepVerdict::Stop;
                }
            }
            prev_hit = xc;
            prev_t = tc;
            ++hits;
        }
        g_prev = g_new;
        t_prev = t;
        have_prev = true;
        return StepVerdict::Continue;
    };
    g_prev = seed[2] - ysec;
    t_prev = 0.0;
    have_prev = true;
    const Termination term = drive(field, 0.0, seed, Direction::Backward, cfg, obs);
    if (!converged) {
        if (term == Termination::Escaped) throw Unbounded();
        throw NoConvergence("find_limit_cycle_backward: returns did not settle");
    }

    // amplitude over one backward loop
    {
        IntegratorConfig c2 = cfg;
        c2.max_time = orbit.period;
        const Trajectory loop = integrate_field(field, orbit.point, 0.0,
                                                Direction::Backward, c2);
        double xmin = orbit.point[0], xmax = orbit.point[0];
        for (std::size_t i = 0; i < loop.size(); ++i) {
            xmin = std::min(xmin, loop.states()[i][0]);
            xmax = std::max(xmax, loop.states()[i][0]);
        }
        orbit.amplitude = xmax - xmin;
    }

    // forward monodromy over one period: 12-dimensional variational system
    {
        using V12 = Eigen::Matrix<double, 12, 1>;
        auto var = [&](double, const V12& z, V12& out) {
            const State x(z[0], z[1], z[2]);
            State fx;
            field(0.0, x, fx);
            const Mat3 j = fhn_jacobian(x, prm, TimeScale::Slow);
            out.segment<3>(0) = fx;
            for (int c = 0; c < 3; ++c)
                out.segment<3>(3 + 3 * c) = j * z.segment<3>(3 + 3 * c);
        };
        V12 z;
        z.segment<3>(0) = orbit.point;
        z.segment<3>(3) = State::UnitX();
        z.segment<3>(6) = State::UnitY();
        z.segment<3>(9) = State::UnitZ();
        z = integrate_end<12>(var, 0.0, z, orbit.period, cfg.rel_tol, cfg.abs_tol);
        Mat3 mon;
        for (int c = 0; c < 3; ++c) mon.col(c) = z.segment<3>(3 + 3 * c);
        // deflate the trivial multiplier 1 from the characteristic polynomial:
        // the nontrivial pair solves  m^2 + (1 - tr) m + (m2 + 1 - tr) = 0
        const auto [tr, m2, det] = char_coeffs(mon);
        const double a = 1.0 - tr;
        const double bq = m2 + 1.0 - tr;
        const double disc = a * a - 4.0 * bq;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double r1 = 0.5 * (-a + (a <= 0.0 ? sq : -sq));
            const double r2 = (r1 != 0.0) ? bq / r1 : 0.5 * (-a - sq);
            orbit.mult1 = std::abs(r1);
            orbit.mult2 = std::abs(r2);
        } else {
            orbit.mult1 = orbit.mult2 = std::sqrt(bq);
        }
        orbit.completely_unstable = orbit.mult1 > 1.0 && orbit.mult2 > 1.0;
    }
    return orbit;
}

void write_trace_csv(const SectionTrace& tr, const std::string& path,
                     const std::string& header_comment) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "seed_angle,x1,x2\n" << std::setprecision(16);
    for (std::size_t i = 0; i < tr.points.size(); ++i)
        os << tr.seed_param[i] << ',' << tr.points[i][0] << ',' << tr.points[i][1] << '\n';
}

void write_curve_csv(const ParamCurve& curve, const std::string& path,
                     const std::string& header_comment) {
    static const char* names[] = {"tangency", "distance_contour", "splitting", "hopf",
                                  "canard_boundary"};
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "s,p,residual,kind\n" << std::setprecision(16);
    for (std::size_t i = 0; i < curve.p.size(); ++i)
        os << curve.s[i] << ',' << curve.p[i] << ',' << curve.residual[i] << ','
           << names[static_cast<int>(curve.kind)] << '\n';
}

}  // namespace fhn
