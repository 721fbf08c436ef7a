#include "fhn/canard_mmo.hpp"

#include "fhn/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fhn {

CanardClass canard_classify(const Params& prm, const IntegratorConfig& cfg,
                            double seed_fraction) {
    const auto cm = critical_manifold(prm);
    const double x1_seed = cm.fold_lo + seed_fraction * (cm.fold_hi - cm.fold_lo);
    Trajectory tr = middle_branch_backward(prm, x1_seed, cfg);
    CanardClass out;
    out.tag = (tr.termination() == Termination::Escaped)
                  ? CanardClass::Tag::UnboundedEscape
                  : CanardClass::Tag::BoundedAlphaLimit;
    if (tr.termination() == Termination::HorizonReached) {
        const double nrm = tr.back().norm();
        if (nrm >= 0.5 * cfg.escape_radius && nrm <= cfg.escape_radius) {
            throw Inconclusive();
        }
    }
    out.witness = std::move(tr);
    return out;
}

ParamCurve canard_boundary(const Params& base, const CurveScanOptions& opt,
                           const IntegratorConfig& cfg, double p_lo, double p_hi,
                           double p_width) {
    ParamCurve curve;
    curve.kind = CurveKind::CanardBoundary;
    std::vector<std::optional<std::array<double, 2>>> rows(opt.n);
    parallel_for(opt.n, opt.threads, [&](std::size_t i) {
        const double s = opt.s_lo + (opt.s_hi - opt.s_lo) * double(i) / std::max(1, opt.n - 1);
        const Params prm = base.with_s(s);
        // escape (left of the boundary) at small p, bounded at large p
        auto esc = [&](double p) {
            return canard_classify(prm.with_p(p), cfg).tag ==
                   CanardClass::Tag::UnboundedEscape;
        };
        double lo = p_lo, hi = p_hi;
        if (!esc(lo) || esc(hi)) return;  // skipped, no sign change
        while (hi - lo > p_width) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            if (esc(mid)) lo = mid; else hi = mid;
        }
        rows[i] = std::array<double, 2>{s, 0.5 * (lo + hi)};
    });
    for (int i = 0; i < opt.n; ++i) {
        if (!rows[i]) { curve.skipped.push_back(i); continue; }
        curve.s.push_back((*rows[i])[0]);
        curve.p.push_back((*rows[i])[1]);
        curve.residual.push_back(0.5 * p_width);
    }
    return curve;
}

std::string MmoSignature::str() const {
    if (blocks.empty()) return "-";
    std::ostringstream os;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) os << ' ';
        os << blocks[i].first << '^' << blocks[i].second;
    }
    return os.str();
}

MmoSignature MmoSignature::repeating_unit() const {
    MmoSignature out = *this;
    const std::size_t n = blocks.size();
    for (std::size_t len = 1; len <= n / 2; ++len) {
        if (n % len != 0) continue;
        bool ok = true;
        for (std::size_t i = len; i < n && ok; ++i)
            ok = blocks[i] == blocks[i % len];
        if (ok) {
            out.blocks.assign(blocks.begin(), blocks.begin() + len);
            return out;
        }
    }
    return out;
}

MmoSignature mmo_signature_from_maxima(const std::vector<double>& maxima,
                                       double large_threshold, double small_lo,
                                       double small_hi) {
    if (maxima.empty()) throw NoOscillations();
    MmoSignature sig;
    sig.large_threshold = large_threshold;
    sig.small_lo = small_lo;
    sig.small_hi = small_hi;
    std::string labels;
    for (double v : maxima) {
        if (v >= large_threshold) labels.push_back('L');
        else if (v >= small_lo && v <= small_hi) labels.push_back('S');
    }
    if (labels.empty()) return sig;
    // drop the leading partial block: start at the first L run boundary
    std::size_t start = labels.find('L');
    if (start == std::string::npos) {
        // only small oscillations: report a single (0, s) block
        int count = static_cast<int>(labels.size());
        sig.blocks.emplace_back(0, count);
        return sig;
    }
    std::size_t i = start;
    while (i < labels.size()) {
        int nl = 0, ns = 0;
        while (i < labels.size() && labels[i] == 'L') { ++nl; ++i; }
        while (i < labels.size() && labels[i] == 'S') { ++ns; ++i; }
        if (i >= labels.size() && ns == 0) break;  // trailing partial block
        sig.blocks.emplace_back(nl, ns);
    }
    return sig;
}

MmoSignature mmo_signature(const Trajectory& traj, double large_threshold,
                           double small_lo, double small_hi) {
    // local maxima of x1 over the dense output
    std::vector<double> maxima;
    const std::size_t n = traj.size();
    if (n < 3) throw NoOscillations();
    const int sub = 8;
    std::vector<double> ts, xs;
    ts.reserve(n * sub);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double t0 = traj.times()[i], t1 = traj.times()[i + 1];
        for (int k = 0; k < sub; ++k) {
            const double t = t0 + (t1 - t0) * k / sub;
            ts.push_back(t);
            xs.push_back(traj.eval(t)[0]);
        }
    }
    ts.push_back(traj.t_back());
    xs.push_back(traj.back()[0]);
    for (std::size_t i = 1; i + 1 < xs.size(); ++i)
        if (xs[i] > xs[i - 1] && xs[i] >= xs[i + 1]) maxima.push_back(xs[i]);
    if (maxima.empty()) throw NoOscillations();
    return mmo_signature_from_maxima(maxima, large_threshold, small_lo, small_hi);
}

std::vector<MmoSample> mmo_scan(const Params& base, const MmoScanOptions& opt,
                                const IntegratorConfig& cfg) {
    const double anchor_p = opt.anchor_p > 0.0 ? opt.anchor_p : opt.p_hi;
    Params prm = base.with_p(anchor_p);
    // seed: backward-attracting small cycle near the Hopf curve
    PeriodicOrbit seed;
    double p_at_seed = anchor_p;
    bool found = false;
    for (int attempt = 0; attempt < 8 && !found; ++attempt) {
        try {
            seed = find_limit_cycle_backward(prm.with_p(p_at_seed), cfg);
            found = true;
        } catch (const Error&) {
            p_at_seed += 0.004;  // walk toward the Hopf point
        }
    }
    if (!found) throw NoConvergence("mmo_scan: no backward seed cycle found");

    MsOptions mso;
    std::vector<State> nodes = nodes_from_loop(prm.with_p(p_at_seed), seed.point,
                                               seed.period, opt.n_nodes,
                                               Direction::Backward, cfg);
    ContinuationState st;
    st.orbit = solve_periodic(prm.with_p(p_at_seed), nodes, seed.period, mso);
    st.tangent = Eigen::VectorXd::Zero(3 * opt.n_nodes + 2);
    st.tangent[3 * opt.n_nodes + 1] = -1.0;  // start toward decreasing p
    st.ds = 1e-3;

    std::vector<MmoSample> rows;
    auto classify = [&](const MsOrbit& o) {
        MmoSample row;
        row.p = o.params.p;
        row.period = o.period;
        const std::vector<double> maxima = orbit_x1_maxima(o, mso);
        double xmax = -1e30, xmin = 1e30;
        for (const auto& nd : o.nodes) {
            xmax = std::max(xmax, nd[0]);
            xmin = std::min(xmin, nd[0]);
        }
        for (double v : maxima) xmax = std::max(xmax, v);
        row.amplitude = xmax - xmin;
        try {
            row.signature = mmo_signature_from_maxima(maxima, opt.large_threshold,
                                                      opt.small_lo, opt.small_hi)
                                .repeating_unit();
        } catch (const NoOscillations&) {
        }
        return row;
    };
    rows.push_back(classify(st.orbit));
    for (int step = 0; step < opt.max_steps; ++step) {
        if (!continuation_step(st, mso)) break;
        rows.push_back(classify(st.orbit));
        if (st.orbit.params.p < opt.p_lo || st.orbit.params.p > opt.p_hi + 0.02) break;
        if (st.orbit.period > 40.0) break;
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MmoSample& a, const MmoSample& b) { return a.p < b.p; });
    return rows;
}

void write_mmo_csv(const std::vector<MmoSample>& rows, const std::string& path,
                   const std::string& header_comment) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "p,period,amplitude,signature\n" << std::setprecision(16);
    for (const auto& r : rows)
        os << r.p << ',' << r.period << ',' << r.amplitude << ",\"" << r.signature.str()
           << "\"\n";
}

}  // namespace fhn
