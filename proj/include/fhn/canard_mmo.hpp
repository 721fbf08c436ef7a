#pragma once

#include "fhn/periodic_orbit.hpp"
#include "fhn/scan.hpp"

#include <string>
#include <vector>

namespace fhn {

/// Backward-flow dichotomy along the middle branch (Fig. 6 mechanism):
/// escape in backward time vs bounded alpha-limit.
struct CanardClass {
    enum class Tag { UnboundedEscape, BoundedAlphaLimit };
    Tag tag = Tag::BoundedAlphaLimit;
    Trajectory witness;
};

/// Classifies the backward trajectory from the mid-branch seed by escape vs
/// boundedness over the configured horizon. Throws Inconclusive when the
/// horizon is reached with the state still transiently large.
CanardClass canard_classify(const Params& prm, const IntegratorConfig& cfg,
                            double seed_fraction = 0.5);

/// Curve in (p, s) where the canard behaviour of the backward flow starts:
/// bisection on p to bracket width 1e-6 at each s sample.
ParamCurve canard_boundary(const Params& base, const CurveScanOptions& opt,
                           const IntegratorConfig& cfg,
                           double p_lo = 0.0, double p_hi = 0.14,
                           double p_width = 1e-6);

/// L^s signature: alternating blocks of consecutive large / small x1-maxima.
struct MmoSignature {
    std::vector<std::pair<int, int>> blocks;  ///< (L, s) pairs
    double large_threshold = 0.5;
    double small_lo = 0.01, small_hi = 0.3;

    bool empty() const { return blocks.empty(); }
    std::string str() const;
    /// minimal repeating unit of the block sequence
    MmoSignature repeating_unit() const;
};

/// Signature from a list of x1 maxima (ordered along the orbit / trajectory).
/// Maxima outside both bands are ignored. Leading and trailing partial blocks
/// are dropped. Throws NoOscillations when there are no maxima at all.
MmoSignature mmo_signature_from_maxima(const std::vector<double>& maxima,
                                       double large_threshold = 0.5,
                                       double small_lo = 0.01, double small_hi = 0.3);

/// Signature of a trajectory: local maxima of x1(t) from dense output.
MmoSignature mmo_signature(const Trajectory& traj, double large_threshold = 0.5,
                           double small_lo = 0.01, double small_hi = 0.3);

/// One row of the MMO scan: parameter, signature of the periodic orbit there,
/// and orbit data.
struct MmoSample {
    double p = 0.0;
    double period = 0.0;
    double amplitude = 0.0;
    MmoSignature signature;
};

struct MmoScanOptions {
    double p_lo = 0.04, p_hi = 0.09;
    int max_steps = 600;          ///< continuation step budget
    int n_nodes = 48;
    double anchor_p = -1.0;       ///< seed-orbit parameter; < 0 picks p_hi
    double large_threshold = 0.5;
    double small_lo = 0.01, small_hi = 0.3;
};

/// MMO catalogue at fixed s by continuation of the periodic-orbit family in p,
/// seeded from the backward-attracting small cycle near the Hopf curve. The
/// orbits themselves are unstable; forward initial-value scans escape for all
/// p at s = 1, so the family is tracked as a boundary-value object and each
/// orbit is classified by its L^s signature. Deterministic.
std::vector<MmoSample> mmo_scan(const Params& base, const MmoScanOptions& opt,
                                const IntegratorConfig& cfg);

void write_mmo_csv(const std::vector<MmoSample>& rows, const std::string& path,
                   const std::string& header_comment = "");

}  // namespace fhn
