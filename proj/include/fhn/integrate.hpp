#pragma once

#include "fhn/model.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace fhn {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 1e3;         ///< bound on |h| in integration time
    double escape_radius = 10.0;   ///< norm bound beyond which the run stops
    double max_time = 1e4;         ///< horizon in integration time units

    void validate() const {
        if (!(rel_tol > 0 && abs_tol > 0 && max_step > 0 && escape_radius > 0 && max_time > 0))
            throw Error("IntegratorConfig: all fields must be positive");
    }
};

enum class Direction { Forward, Backward };
enum class Termination { HorizonReached, SectionHit, Escaped };

/// Dense-output coefficients of one accepted step, evaluated with the
/// dop853 contraction formula. Hermite segments reuse the same storage with
/// rc[4..7] = 0.
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;  // signed
    std::array<State, 8> rc{};

    State eval(double t) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        return rc[0] +
               s * (rc[1] +
                    s1 * (rc[2] +
                          s * (rc[3] +
                               s1 * (rc[4] +
                                     s * (rc[5] + s1 * (rc[6] + s * rc[7]))))));
    }

    static DenseStep hermite(double t0, double h, const State& y0, const State& y1,
                             const State& f0, const State& f1) {
        DenseStep d;
        d.t0 = t0;
        d.h = h;
        const State ydiff = y1 - y0;
        const State bspl = h * f0 - ydiff;
        d.rc[0] = y0;
        d.rc[1] = ydiff;
        d.rc[2] = bspl;
        d.rc[3] = ydiff - h * f1 - bspl;
        for (int k = 4; k < 8; ++k) d.rc[k].setZero();
        return d;
    }
};

/// Time-parametrized orbit segment with dense output between nodes.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<double> times, std::vector<State> states,
               std::vector<DenseStep> steps, Termination term)
        : times_(std::move(times)), states_(std::move(states)),
          steps_(std::move(steps)), term_(term) {}

    const std::vector<double>& times() const { return times_; }
    const std::vector<State>& states() const { return states_; }
    Termination termination() const { return term_; }
    void set_termination(Termination t) { term_ = t; }

    double t_front() const { return times_.front(); }
    double t_back() const { return times_.back(); }
    const State& front() const { return states_.front(); }
    const State& back() const { return states_.back(); }
    std::size_t size() const { return times_.size(); }
    bool increasing() const { return times_.back() >= times_.front(); }

    /// Dense evaluation at any time inside the span.
    State eval(double t) const {
        if (times_.size() == 1) return states_.front();
        const bool inc = increasing();
        const double lo = inc ? times_.front() : times_.back();
        const double hi = inc ? times_.back() : times_.front();
        if (t < lo - 1e-12 || t > hi + 1e-12) throw OutOfRange("Trajectory::eval time");
        // locate the step via binary search over node times
        std::size_t a = 0, b = steps_.size();
        while (b - a > 1) {
            const std::size_t mid = (a + b) / 2;
            const bool left = inc ? (t < times_[mid]) : (t > times_[mid]);
            if (left) b = mid; else a = mid;
        }
        return steps_[a].eval(t);
    }

    const DenseStep& step(std::size_t i) const { return steps_[i]; }
    std::size_t n_steps() const { return steps_.size(); }

private:
    std::vector<double> times_;
    std::vector<State> states_;
    std::vector<DenseStep> steps_;
    Termination term_ = Termination::HorizonReached;
};

struct SectionEvent {
    double t = 0.0;
    State state = State::Zero();
    int direction = 0;  ///< sign of dy/dt at the crossing
};

/// Outcome of a section run: either the first crossing, or the escape state,
/// or the horizon was reached without crossing.
struct SectionOutcome {
    Termination kind = Termination::HorizonReached;
    SectionEvent event{};   // valid when kind == SectionHit
    State exit_state = State::Zero();  // valid when kind == Escaped
    double end_time = 0.0;

    const SectionEvent& hit() const {
        if (kind != Termination::SectionHit)
            throw Error("SectionOutcome: no section crossing");
        return event;
    }
};

namespace dop853 {

// Dormand-Prince 8(5,3) coefficients with 6th-order dense output.
inline constexpr double
    c2 = 0.05260015195876773187856, c3 = 0.07890022793815159781784,
    c4 = 0.11835034190722739672676, c5 = 0.28164965809277260327324,
    c6 = 0.33333333333333333333333, c7 = 0.25,
    c8 = 0.30769230769230769230769, c9 = 0.65128205128205128205128,
    c10 = 0.6, c11 = 0.85714285714285714285714,
    b1 = 0.05429373411656876223805, b6 = 4.45031289275240888144114,
    b7 = 1.89151789931450038304282, b8 = -5.80120396001058478146721,
    b9 = 0.31116436695781989440892, b10 = -0.15216094966251607855618,
    b11 = 0.20136540080403034837478, b12 = 0.04471061572777259051769,
    bhh1 = 0.24409448818897637795276, bhh2 = 0.73384668828161185734136,
    bhh3 = 0.02205882352941176470588,
    er1 = 0.01312004499419488073250, er6 = -1.22515644637620444072057,
    er7 = -0.49575894965725019152141, er8 = 1.66437718245498653696153,
    er9 = -0.35032884874997368168865, er10 = 0.33417911871301747902973,
    er11 = 0.08192320648511571246571, er12 = -0.02235530786388629525884,
    a21 = 0.05260015195876773187856,
    a31 = 0.01972505698453789945446, a32 = 0.05917517095361369836338,
    a41 = 0.02958758547680684918169, a43 = 0.08876275643042054754507,
    a51 = 0.24136513415926668550237, a53 = -0.88454947932828608534486,
    a54 = 0.92483400326179200311574,
    a61 = 0.03703703703703703703704, a64 = 0.17082860872947387127960,
    a65 = 0.12546768756682242501669,
    a71 = 0.037109375, a74 = 0.17025221101954403931498,
    a75 = 0.06021653898045596068502, a76 = -0.017578125,
    a81 = 0.03709200011850479271088, a84 = 0.17038392571223999381021,
    a85 = 0.10726203044637328465181, a86 = -0.01531943774862440175279,
    a87 = 0.00827378916381402288758,
    a91 = 0.62411095871607571711443, a94 = -3.36089262944694129406857,
    a95 = -0.86821934684172600681819, a96 = 27.5920996994467083049416,
    a97 = 20.1540675504778934086187, a98 = -43.4898841810699588477366,
    a101 = 0.47766253643826436589043, a104 = -2.48811461997166764192642,
    a105 = -0.59029082683684299637145, a106 = 21.2300514481811942347289,
    a107 = 15.2792336328824235832597, a108 = -33.2882109689848629194453,
    a109 = -0.02033120170850862613582,
    a111 = -0.93714243008598732571704, a114 = 5.18637242884406370830024,
    a115 = 1.09143734899672957818500, a116 = -8.14978701074692612513997,
    a117 = -18.5200656599969598641566, a118 = 22.7394870993505042818970,
    a119 = 2.49360555267965238987089, a1110 = -3.04676447189821950038237,
    a121 = 2.27331014751653820792360, a124 = -10.5344954667372501984067,
    a125 = -2.00087205822486249909676, a126 = -17.9589318631187989172766,
    a127 = 27.9488845294199600508500, a128 = -2.85899827713502369474066,
    a129 = -8.87285693353062954433549, a1210 = 12.3605671757943030647266,
    a1211 = 0.64339274601576353035597,
    d41 = -5.40685903845352664250302, d46 = 367.268892700041893590281,
    d47 = 154.609958204083905482676, d48 = -505.920283865412564024766,
    d49 = 15.5975154819608130688200, d410 = -26.1936204184402805956691,
    d411 = -0.74003512364122230844721, d412 = 1.11776539319431476294221,
    d413 = -0.33333333333333333333333,
    d51 = 6.51987095363079615048119, d56 = -1066.34956011730205278592,
    d57 = -351.864047514639508625601, d58 = 1363.51955696662884408368,
    d59 = -112.727669432657582669864, d510 = 159.796191868560289612921,
    d511 = -2.13865100308788816220259, d512 = -3.75569172113289760348584,
    d513 = 7.0,
    d61 = 10.4698004763293477204238, d66 = -1380.01473607038123167155,
    d67 = -531.219827862514074379012, d68 = 1866.98964341870892451324,
    d69 = -53.3302605020547902574560, d610 = 82.4147560258671369782481,
    d611 = 7.38443654502992069572676, d612 = 0.41729908012587751149843,
    d613 = -3.11111111111111111111111,
    d71 = -16.6338582677165354330709, d76 = 4516.16568914956011730205,
    d77 = 1393.85185384057776465219, d78 = -5687.52042419481539670071,
    d79 = 473.965563750151263163661, d710 = -661.810776942355889724311,
    d711 = -18.0180473354013232598119,
    safe = 0.9, fac1 = 0.333, fac2 = 6.0;

/// One adaptive dop853 step of a generic fixed-size system. Vec must behave
/// like an Eigen fixed vector. Returns the signed step actually taken and
/// leaves (t, y, k1) advanced; `rc` receives dense coefficients if non-null.
template <class Vec, class F>
double step(F&& f, double& t, Vec& y, Vec& k1, double& h, double rel_tol,
            double abs_tol, std::array<Vec, 8>* rc) {
    Vec k2, k3, k4, k5, k6, k7, k8, k9, k10, ytemp, ynew, fnew;
    for (;;) {
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)) || !std::isfinite(h))
            throw StepSizeUnderflow(t);
        ytemp = y + h * (a21 * k1);
        f(t + c2 * h, ytemp, k2);
        ytemp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, ytemp, k3);
        ytemp = y + h * (a41 * k1 + a43 * k3);
        f(t + c4 * h, ytemp, k4);
        ytemp = y + h * (a51 * k1 + a53 * k3 + a54 * k4);
        f(t + c5 * h, ytemp, k5);
        ytemp = y + h * (a61 * k1 + a64 * k4 + a65 * k5);
        f(t + c6 * h, ytemp, k6);
        ytemp = y + h * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
        f(t + c7 * h, ytemp, k7);
        ytemp = y + h * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
        f(t + c8 * h, ytemp, k8);
        ytemp = y + h * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8);
        f(t + c9 * h, ytemp, k9);
        ytemp = y + h * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 +
                         a108 * k8 + a109 * k9);
        f(t + c10 * h, ytemp, k10);
        ytemp = y + h * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 +
                         a118 * k8 + a119 * k9 + a1110 * k10);
        f(t + c11 * h, ytemp, k2);  // k2, k3 reused as k11, k12 as in dop853
        ytemp = y + h * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 +
                         a128 * k8 + a129 * k9 + a1210 * k10 + a1211 * k2);
        f(t + h, ytemp, k3);
        const Vec bsum = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 +
                         b11 * k2 + b12 * k3;
        ynew = y + h * bsum;

        double err = 0.0, err2 = 0.0;
        for (int i = 0; i < Vec::RowsAtCompileTime; ++i) {
            const double sk = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            if (sk == 0.0) continue;
            double e = bsum[i] - bhh1 * k1[i] - bhh2 * k9[i] - bhh3 * k3[i];
            err2 += (e / sk) * (e / sk);
            e = er1 * k1[i] + er6 * k6[i] + er7 * k7[i] + er8 * k8[i] + er9 * k9[i] +
                er10 * k10[i] + er11 * k2[i] + er12 * k3[i];
            err += (e / sk) * (e / sk);
        }
        double deno = err + 0.01 * err2;
        if (deno <= 0.0) deno = 1.0;
        err = std::abs(h) * err / std::sqrt(deno * static_cast<double>(Vec::RowsAtCompileTime));

        double fac = std::pow(err, 1.0 / 8.0);
        fac = std::max(1.0 / fac2, std::min(1.0 / fac1, fac / safe));
        if (err <= 1.0) {
            f(t + h, ynew, fnew);
            if (rc) {
                const Vec ydiff = ynew - y;
                const Vec bspl = h * k1 - ydiff;
                (*rc)[0] = y;
                (*rc)[1] = ydiff;
                (*rc)[2] = bspl;
                (*rc)[3] = ydiff - h * fnew - bspl;
                (*rc)[4] = h * (d41 * k1 + d46 * k6 + d47 * k7 + d48 * k8 + d49 * k9 +
                                d410 * k10 + d411 * k2 + d412 * k3 + d413 * fnew);
                (*rc)[5] = h * (d51 * k1 + d56 * k6 + d57 * k7 + d58 * k8 + d59 * k9 +
                                d510 * k10 + d511 * k2 + d512 * k3 + d513 * fnew);
                (*rc)[6] = h * (d61 * k1 + d66 * k6 + d67 * k7 + d68 * k8 + d69 * k9 +
                                d610 * k10 + d611 * k2 + d612 * k3 + d613 * fnew);
                (*rc)[7] = h * (d71 * k1 + d76 * k6 + d77 * k7 + d78 * k8 + d79 * k9 +
                                d710 * k10 + d711 * k2);
            }
            const double h_taken = h;
            t += h;
            y = ynew;
            k1 = fnew;
            h /= fac;
            return h_taken;
        }
        h /= std::min(1.0 / fac1, fac / safe);
    }
}

/// Initial step size heuristic (Hairer's hinit), sign carried by `dir`.
template <class Vec, class F>
double initial_step(F&& f, double t, const Vec& y, const Vec& k1, double dir,
                    double rel_tol, double abs_tol, double max_step) {
    double dnf = 0.0, dny = 0.0;
    for (int i = 0; i < Vec::RowsAtCompileTime; ++i) {
        const double sk = abs_tol + rel_tol * std::abs(y[i]);
        if (sk == 0.0) continue;
        dnf += (k1[i] / sk) * (k1[i] / sk);
        dny += (y[i] / sk) * (y[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, max_step);
    Vec ytemp = y + (dir * h) * k1;
    Vec k2;
    f(t + dir * h, ytemp, k2);
    double der2 = 0.0;
    for (int i = 0; i < Vec::RowsAtCompileTime; ++i) {
        const double sk = abs_tol + rel_tol * std::abs(y[i]);
        if (sk == 0.0) continue;
        der2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = (der12 <= 1e-15) ? std::max(1e-6, h * 1e-3)
                                       : std::pow(0.01 / der12, 1.0 / 8.0);
    h = std::min({100.0 * h, h1, max_step});
    return dir * h;
}

}  // namespace dop853

/// Observer verdict after each accepted step.
enum class StepVerdict { Continue, Stop };

/// Core adaptive driver. F: void(double t, const State&, State&).
/// The observer sees every accepted step (with dense coefficients) and may
/// stop the run. Returns the termination reason (HorizonReached unless the
/// observer stopped the run or the escape radius was exceeded).
template <class F, class Observer>
Termination drive(F&& f, double t0, const State& y0, Direction dir,
                  const IntegratorConfig& cfg, Observer&& obs) {
    cfg.validate();
    const double sgn = (dir == Direction::Forward) ? 1.0 : -1.0;
    const double tend = t0 + sgn * cfg.max_time;
    double t = t0;
    State y = y0, k1;
    f(t, y, k1);
    double h = dop853::initial_step(f, t, y, k1, sgn, cfg.rel_tol, cfg.abs_tol, cfg.max_step);
    std::array<State, 8> rc;
    while (sgn * (tend - t) > 1e-14 * std::max(1.0, std::abs(t))) {
        if (std::abs(h) > cfg.max_step) h = sgn * cfg.max_step;
        if (sgn * (t + h - tend) > 0.0) h = tend - t;
        const double t_prev = t;
        const double h_taken = dop853::step(f, t, y, k1, h, cfg.rel_tol, cfg.abs_tol, &rc);
        DenseStep ds;
        ds.t0 = t_prev;
        ds.h = h_taken;
        ds.rc = rc;
        const bool escaped = y.norm() > cfg.escape_radius;
        if (obs(t, y, k1, ds, escaped) == StepVerdict::Stop) return Termination::SectionHit;
        if (escaped) return Termination::Escaped;
    }
    return Termination::HorizonReached;
}

enum class RhsSelector { Full, Layer, ModelLinear };

/// Linear saddle-focus field of the geometric model:
/// u' = -beta u - alpha v, v' = alpha u - beta v, w' = gamma.
struct LinearModelField {
    double beta, alpha_rot, gamma;
    void operator()(double, const State& x, State& out) const {
        out[0] = -beta * x[0] - alpha_rot * x[1];
        out[1] = alpha_rot * x[0] - beta * x[1];
        out[2] = gamma;
    }
};

struct FhnField {
    Params prm;
    TimeScale scale = TimeScale::Slow;
    void operator()(double, const State& x, State& out) const {
        const double f = cubic_f(x[0], prm.alpha_cubic);
        const double g2 = (prm.s * x[1] - f + x[2] - prm.p) / prm.delta;
        if (scale == TimeScale::Fast) {
            out[0] = x[1];
            out[1] = g2;
            out[2] = prm.eps * (x[0] - x[2]) / prm.s;
        } else {
            out[0] = x[1] / prm.eps;
            out[1] = g2 / prm.eps;
            out[2] = (x[0] - x[2]) / prm.s;
        }
    }
};

/// Layer (fast subsystem) field: y frozen, evolves (x1, x2) on the fast scale.
struct LayerField {
    Params prm;
    void operator()(double, const State& x, State& out) const {
        out[0] = x[1];
        out[1] = (prm.s * x[1] - cubic_f(x[0], prm.alpha_cubic) + x[2] - prm.p) / prm.delta;
        out[2] = 0.0;
    }
};

/// Full-storage integration producing a dense Trajectory.
template <class F>
Trajectory integrate_field(F&& f, const State& start, double t0, Direction dir,
                           const IntegratorConfig& cfg) {
    std::vector<double> times{t0};
    std::vector<State> states{start};
    std::vector<DenseStep> steps;
    auto obs = [&](double t, const State& y, const State&, const DenseStep& ds,
                   bool) -> StepVerdict {
        times.push_back(t);
        states.push_back(y);
        steps.push_back(ds);
        return StepVerdict::Continue;
    };
    const Termination term = drive(f, t0, start, dir, cfg, obs);
    return Trajectory(std::move(times), std::move(states), std::move(steps), term);
}

/// integrate() per the module contract: selector picks the vector field.
/// Full uses the slow time scale of the FitzHugh-Nagumo system.
Trajectory integrate(RhsSelector sel, const Params& prm, const State& start,
                     Direction dir, const IntegratorConfig& cfg,
                     const LinearModelField* model = nullptr);

/// First crossing of the plane y = y_section in the given direction,
/// localized on the dense output to |y - y_section| <= 1e-10.
SectionOutcome integrate_to_section(const Params& prm, const State& start,
                                    Direction dir, double y_section,
                                    const IntegratorConfig& cfg,
                                    TimeScale scale = TimeScale::Slow,
                                    int want_sign = 0);

/// Generic section run for any field: crossing of g(state) = 0.
template <class F>
SectionOutcome run_to_section(F&& f, const State& start, double t0, Direction dir,
                              double y_section, const IntegratorConfig& cfg,
                              int want_sign = 0) {
    SectionOutcome out;
    double g_prev = start[2] - y_section;
    double t_prev = t0;
    bool first = true;
    // a crossing exactly at the start counts if the flow is transversal
    auto obs = [&](double t, const State& y, const State&, const DenseStep& ds,
                   bool escaped) -> StepVerdict {
        const double g_new = y[2] - y_section;
        const bool sign_change = (g_prev == 0.0) || (g_prev * g_new <= 0.0 && g_new != g_prev);
        if (sign_change) {
            // localize by bisection + Newton on the interpolant
            double ta = t_prev, tb = t;
            double ga = g_prev;
            if (ga == 0.0) {
                out.kind = Termination::SectionHit;
                out.event.t = ta;
                out.event.state = ds.eval(ta);
                out.event.direction = (g_new > ga) ? 1 : -1;
                return StepVerdict::Stop;
            }
            for (int it = 0; it < 200 && std::abs(tb - ta) > 1e-15 * std::max(1.0, std::abs(tb)); ++it) {
                const double tm = 0.5 * (ta + tb);
                if (tm == ta || tm == tb) break;
                const double gm = ds.eval(tm)[2] - y_section;
                if (gm == 0.0) { ta = tb = tm; break; }
                if (ga * gm < 0.0) tb = tm; else { ta = tm; ga = gm; }
            }
            const double tc = 0.5 * (ta + tb);
            const State sc = ds.eval(tc);
            const int cross_dir = (g_new > g_prev) ? 1 : -1;
            if (want_sign == 0 || cross_dir == want_sign) {
                out.kind = Termination::SectionHit;
                out.event.t = tc;
                out.event.state = sc;
                out.event.direction = cross_dir;
                return StepVerdict::Stop;
            }
        }
        g_prev = g_new;
        t_prev = t;
        if (escaped) {
            out.exit_state = y;
            out.end_time = t;
        }
        first = false;
        (void)first;
        return StepVerdict::Continue;
    };
    const Termination term = drive(f, t0, start, dir, cfg, obs);
    if (out.kind != Termination::SectionHit) {
        out.kind = term;
        out.end_time = t_prev;
        if (term != Termination::Escaped) out.exit_state = State::Zero();
    }
    return out;
}

/// Endpoint-only integration of an N-dimensional augmented system
/// (variational runs); no dense storage, fixed horizon.
template <int N, class F>
Eigen::Matrix<double, N, 1> integrate_end(F&& f, double t0,
                                          Eigen::Matrix<double, N, 1> y, double t1,
                                          double rel_tol, double abs_tol,
                                          double max_step = 1e3) {
    using Vec = Eigen::Matrix<double, N, 1>;
    if (t1 == t0) return y;
    const double sgn = (t1 > t0) ? 1.0 : -1.0;
    double t = t0;
    Vec k1;
    f(t, y, k1);
    double h = dop853::initial_step(f, t, y, k1, sgn, rel_tol, abs_tol, max_step);
    while (sgn * (t1 - t) > 1e-15 * std::max(1.0, std::abs(t))) {
        if (std::abs(h) > max_step) h = sgn * max_step;
        if (sgn * (t + h - t1) > 0.0) h = t1 - t;
        dop853::step(f, t, y, k1, h, rel_tol, abs_tol, static_cast<std::array<Vec, 8>*>(nullptr));
    }
    return y;
}

/// CSV export: columns t, x1, x2, y at 16 significant digits.
void write_trajectory_csv(const Trajectory& tr, const std::string& path,
                          const std::string& header_comment = "");

}  // namespace fhn
