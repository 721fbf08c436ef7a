#pragma once

#include "fhn/slow_manifold.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fhn {

/// Ordered intersection of a two-dimensional invariant manifold with a
/// cross-section plane y = const.
struct SectionTrace {
    enum class Provenance { StableManifoldOfQ, MeshTrace };
    Provenance provenance = Provenance::StableManifoldOfQ;
    double y_section = 0.09;
    std::vector<double> seed_param;  ///< seed angle, ordered
    std::vector<Vec2> points;        ///< (x1, x2) at the crossing
    int escaped = 0;                 ///< seeds excluded (escape / no crossing)
};

struct TraceOptions {
    int n_seeds = 400;
    double seed_radius = 1e-3;
};

/// W^s(q) trace on the section: seeds on a circle in the plane spanned by the
/// real and imaginary parts of the complex eigenvector at q, integrated
/// backward to their first crossing.
SectionTrace ws_trace(const Params& prm, double y_section, int n_seeds,
                      double seed_radius, const IntegratorConfig& cfg);

/// The two branches of the one-dimensional W^u(q), offset 1e-6 along the
/// real eigenvector; first element is the branch oriented toward increasing x1.
std::pair<Trajectory, Trajectory> wu_branches(const Params& prm,
                                              const IntegratorConfig& cfg,
                                              double offset = 1e-6);

/// Turn point of an ordered trace in the (xi, eta) frame at p_l:
/// xi along e_u, eta along e_s. The turn is the interior extremum of the
/// xi-coordinate along the trace (quadratically refined); delta is the xi
/// value there. Throws NoTurn when xi is monotone along the trace.
struct TurnPoint {
    Vec2 point = Vec2::Zero();  ///< (xi, eta) frame coordinates of the turn
    Vec2 section_point = Vec2::Zero();  ///< same point in (x1, x2)
    double delta = 0.0;         ///< signed xi offset
};

TurnPoint turn_point(const SectionTrace& trace, const Eigenframe& frame);

/// Frame transform helper: solve [e_u e_s] * (xi, eta) = x - p_l.
Vec2 frame_coords(const Vec2& x, const Eigenframe& frame);

/// Sharp-turn side indicator used for the tangency bisection. Negative when
/// the trace penetrates past the E^u(C_{l,eps}) curve near p_l (the regime
/// with W^s(q) and W^u(C_{l,eps}) intersecting), positive when the turn stays
/// short of it. Dips of the trace are refined in the seed angle until the tip
/// side is resolved.
struct TurnScanOptions {
    int n_seeds = 400;
    double seed_radius = 1e-3;
    double xi_band = 2e-2;      ///< near-manifold filter in the e_u coordinate
    int refine_iters = 40;
    double y_section = 0.09;
    double y_bvp_lo = 0.06;     ///< slow-manifold y range for p_l
    double y_bvp_hi = 0.13;
    double max_time = 120.0;    ///< backward horizon per seed (slow time)
};

double turn_offset_signed(const Params& prm, const TurnScanOptions& opt,
                          const IntegratorConfig& cfg, int threads = 1);

enum class CurveKind { Tangency, DistanceContour, Splitting, Hopf, CanardBoundary };

/// Parameter-plane curve: samples ((p, s), residual), sorted by s.
struct ParamCurve {
    CurveKind kind = CurveKind::Hopf;
    std::vector<double> s;
    std::vector<double> p;
    std::vector<double> residual;
    std::vector<double> aux;  ///< kind-specific (e.g. distance-contour side sign)
    std::vector<int> skipped;  ///< s-indices where no sign change was found
};

struct CurveScanOptions {
    double s_lo = 1.25, s_hi = 1.45;
    int n = 9;
    double p_tol = 1e-8;        ///< bracket half-width target in p
    int threads = 1;
    TurnScanOptions turn;       ///< for Tangency / DistanceContour
};

ParamCurve tangency_curve(const Params& base, const CurveScanOptions& opt,
                          const IntegratorConfig& cfg);

ParamCurve distance_contour(const Params& base, double level,
                            const CurveScanOptions& opt, const IntegratorConfig& cfg);

/// Splitting classification of the W^u(q) branch toward C_r after its first
/// fast excursion: falls left (x1 below fold_lo - 0.1) or escapes right.
enum class SplitSide { Left, Right };
SplitSide splitting_classify(const Params& prm, const IntegratorConfig& cfg);

ParamCurve splitting_curve(const Params& base, const CurveScanOptions& opt,
                           const IntegratorConfig& cfg);

/// Hopf locus: Re of the complex pair at q vanishes; left branch (near p_-).
ParamCurve hopf_curve(const Params& base, const CurveScanOptions& opt);
double hopf_p(const Params& base, double s, double p_lo = -1.0, double p_hi = -1.0);

/// Euclidean distance in the (p, s) plane between the tangency curve and the
/// Hopf curve (minimum over the scanned s range).
struct Table1Row {
    double eps;
    double distance;
    double ratio;      ///< distance / eps
    double s_at_min;
    ParamCurve tangency;
    ParamCurve hopf;
};

Table1Row tangency_hopf_distance(const Params& base, double eps,
                                 const CurveScanOptions& opt,
                                 const IntegratorConfig& cfg);

/// Backward alpha-limit periodic orbit from a seed in W^s(q).
struct PeriodicOrbit {
    double period = 0.0;
    State point = State::Zero();
    double amplitude = 0.0;
    bool completely_unstable = false;
    double mult1 = 0.0, mult2 = 0.0;  ///< nontrivial Floquet multiplier magnitudes
    double recurrence_residual = 0.0;
};

PeriodicOrbit find_limit_cycle_backward(const Params& prm, const IntegratorConfig& cfg,
                                        double seed_radius = 1e-3,
                                        double return_tol = 1e-8);

/// CSV exports.
void write_trace_csv(const SectionTrace& tr, const std::string& path,
                     const std::string& header_comment = "");
void write_curve_csv(const ParamCurve& curve, const std::string& path,
                     const std::string& header_comment = "");

}  // namespace fhn
