#include "fhn/periodic_orbit.hpp"

#include <Eigen/Dense>

namespace fhn {

namespace {

// state + 3x3 variational + d/dp column, slow time scale
struct Var15 {
    Params prm;
    void operator()(double, const Eigen::Matrix<double, 15, 1>& z,
                    Eigen::Matrix<double, 15, 1>& out) const {
        const State x(z[0], z[1], z[2]);
        const Mat3 j = fhn_jacobian(x, prm, TimeScale::Slow);
        State fx;
        FhnField{prm, TimeScale::Slow}(0.0, x, fx);
        out.segment<3>(0) = fx;
        for (int c = 0; c < 3; ++c)
            out.segment<3>(3 + 3 * c) = j * z.segment<3>(3 + 3 * c);
        const State dfdp(0.0, -1.0 / (prm.eps * prm.delta), 0.0);
        out.segment<3>(12) = j * z.segment<3>(12) + dfdp;
    }
};

struct SegmentFlow {
    State end;
    Mat3 phi;
    State dp;
    State f_end;
};

SegmentFlow flow_segment(const Params& prm, const State& x0, double h,
                         const MsOptions& opt) {
    Eigen::Matrix<double, 15, 1> z;
    z.segment<3>(0) = x0;
    z.segment<3>(3) = State::UnitX();
    z.segment<3>(6) = State::UnitY();
    z.segment<3>(9) = State::UnitZ();
    z.segment<3>(12) = State::Zero();
    z = integrate_end<15>(Var15{prm}, 0.0, z, h, opt.ivp_rel_tol, opt.ivp_abs_tol);
    SegmentFlow out;
    out.end = z.segment<3>(0);
    for (int c = 0; c < 3; ++c) out.phi.col(c) = z.segment<3>(3 + 3 * c);
    out.dp = z.segment<3>(12);
    FhnField{prm, TimeScale::Slow}(0.0, out.end, out.f_end);
    return out;
}

// weights for the arclength metric: nodes ~ O(1), T ~ O(1), p is the small one
constexpr double kWeightP = 40.0;

Eigen::VectorXd pack(const MsOrbit& o) {
    const int n = o.n_nodes();
    Eigen::VectorXd z(3 * n + 2);
    for (int i = 0; i < n; ++i) z.segment<3>(3 * i) = o.nodes[i];
    z[3 * n] = o.period;
    z[3 * n + 1] = o.params.p;
    return z;
}

void unpack(const Eigen::VectorXd& z, MsOrbit& o) {
    const int n = o.n_nodes();
    for (int i = 0; i < n; ++i) o.nodes[i] = z.segment<3>(3 * i);
    o.period = z[3 * n];
    o.params.p = z[3 * n + 1];
}

/// Newton on the periodic system. When `arclength` is non-null the parameter
/// p is free and the pseudo-arclength row closes the system; otherwise p is
/// pinned by a trivial row.
bool newton_periodic(MsOrbit& o, const MsOptions& opt,
                     const Eigen::VectorXd* z_prev, const Eigen::VectorXd* tangent,
                     double ds) {
    const int n = o.n_nodes();
    const int m = 3 * n + 2;
    Eigen::VectorXd resid(m);
    Eigen::MatrixXd jac(m, m);
    const State anchor = o.nodes[0];
    State f_anchor;
    FhnField{o.params, TimeScale::Slow}(0.0, anchor, f_anchor);

    double rmax_prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iterations; ++it) {
        jac.setZero();
        double rmax = 0.0;
        const double h = o.period / n;
        for (int i = 0; i < n; ++i) {
            const SegmentFlow sf = flow_segment(o.params, o.nodes[i], h, opt);
            const int next = (i + 1) % n;
            const State r = sf.end - o.nodes[next];
            resid.segment<3>(3 * i) = r;
            rmax = std::max(rmax, r.cwiseAbs().maxCoeff());
            jac.block<3, 3>(3 * i, 3 * i) = sf.phi;
            jac.block<3, 3>(3 * i, 3 * next) -= Mat3::Identity();
            jac.block<3, 1>(3 * i, 3 * n) = sf.f_end / n;
            jac.block<3, 1>(3 * i, 3 * n + 1) = sf.dp;
        }
        // phase: keep node 0 in the plane through the anchor normal to the flow
        resid[3 * n] = f_anchor.dot(o.nodes[0] - anchor);
        jac.block<1, 3>(3 * n, 0) = f_anchor.transpose();
        rmax = std::max(rmax, std::abs(resid[3 * n]));
        if (z_prev && tangent) {
            Eigen::VectorXd z = pack(o);
            Eigen::VectorXd d = z - *z_prev;
            d[3 * n + 1] *= kWeightP;
            Eigen::VectorXd tw = *tangent;
            resid[3 * n + 1] = tw.dot(d) - ds;
            Eigen::VectorXd row = tw;
            row[3 * n + 1] *= kWeightP;
            jac.row(3 * n + 1) = row.transpose();
        } else {
            resid[3 * n + 1] = 0.0;
            jac(3 * n + 1, 3 * n + 1) = 1.0;
        }
        if (rmax <= opt.tol && it > 0) {
            o.residual = rmax;
            o.iterations = it;
            return true;
        }
        if (!(rmax < 4.0 * rmax_prev + 1.0)) return false;
        rmax_prev = std::min(rmax_prev, rmax);
        const Eigen::VectorXd step = jac.partialPivLu().solve(-resid);
        if (!step.allFinite()) return false;
        Eigen::VectorXd z = pack(o) + step;
        unpack(z, o);
        if (!(o.period > 1e-4)) return false;
    }
    return false;
}

}  // namespace

MsOrbit solve_periodic(const Params& prm, const std::vector<State>& nodes0,
                       double period0, const MsOptions& opt) {
    MsOrbit o;
    o.params = prm;
    o.nodes = nodes0;
    o.period = period0;
    if (!newton_periodic(o, opt, nullptr, nullptr, 0.0))
        throw NewtonDivergence(o.residual);
    return o;
}

bool continuation_step(ContinuationState& st, const MsOptions& opt, double ds_min,
                       double ds_max) {
    const Eigen::VectorXd z_prev = pack(st.orbit);
    while (st.ds >= ds_min) {
        MsOrbit trial = st.orbit;
        Eigen::VectorXd z0 = z_prev;
        // predictor (tangent is unit in the weighted metric)
        Eigen::VectorXd pred = st.tangent;
        pred[z_prev.size() - 1] /= kWeightP;
        Eigen::VectorXd z = z_prev + st.ds * pred;
        unpack(z, trial);
        if (newton_periodic(trial, opt, &z_prev, &st.tangent, st.ds)) {
            Eigen::VectorXd znew = pack(trial);
            Eigen::VectorXd d = znew - z_prev;
            d[znew.size() - 1] *= kWeightP;
            const double nd = d.norm();
            if (nd > 0.0) st.tangent = d / nd;
            st.orbit = trial;
            st.ds = std::min(st.ds * 1.4, ds_max);
            return true;
        }
        st.ds *= 0.4;
    }
    return false;
}

std::vector<double> orbit_x1_maxima(const MsOrbit& orbit, const MsOptions& opt,
                                    int samples_per_segment) {
    const int n = orbit.n_nodes();
    const double h = orbit.period / n;
    std::vector<double> x1;
    x1.reserve(static_cast<std::size_t>(n) * samples_per_segment);
    for (int i = 0; i < n; ++i) {
        IntegratorConfig cfg;
        cfg.rel_tol = opt.ivp_rel_tol;
        cfg.abs_tol = opt.ivp_abs_tol;
        cfg.max_time = h;
        cfg.escape_radius = 1e9;
        const Trajectory piece = integrate_field(FhnField{orbit.params, TimeScale::Slow},
                                                 orbit.nodes[i], 0.0, Direction::Forward,
                                                 cfg);
        for (int k = 0; k < samples_per_segment; ++k)
            x1.push_back(piece.eval(h * k / samples_per_segment)[0]);
    }
    std::vector<double> maxima;
    const std::size_t m = x1.size();
    for (std::size_t k = 0; k < m; ++k) {
        const double prev = x1[(k + m - 1) % m], cur = x1[k], next = x1[(k + 1) % m];
        if (cur > prev && cur >= next) maxima.push_back(cur);
    }
    return maxima;
}

std::vector<State> nodes_from_loop(const Params& prm, const State& point,
                                   double period, int n_nodes, Direction dir,
                                   const IntegratorConfig& cfg) {
    IntegratorConfig c2 = cfg;
    c2.max_time = period;
    const Trajectory loop = integrate_field(FhnField{prm, TimeScale::Slow}, point, 0.0,
                                            dir, c2);
    // a backward loop covers the cycle in reverse: x(t) = loop(t - T)
    std::vector<State> nodes(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        const double tf = period * i / n_nodes;
        double t = (dir == Direction::Forward) ? tf : tf - period;
        if (i == 0) t = 0.0;
        t = std::clamp(t, std::min(loop.t_front(), loop.t_back()),
                       std::max(loop.t_front(), loop.t_back()));
        nodes[i] = loop.eval(t);
    }
    return nodes;
}

}  // namespace fhn
