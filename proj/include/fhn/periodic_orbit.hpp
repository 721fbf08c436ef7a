#pragma once

#include "fhn/integrate.hpp"

#include <vector>

namespace fhn {

/// Periodic orbit represented by multiple-shooting nodes. The orbit may be
/// strongly unstable; the node representation stays well conditioned where a
/// single-shot integration over the full period would not.
struct MsOrbit {
    Params params;
    std::vector<State> nodes;
    double period = 0.0;
    double residual = 0.0;
    int iterations = 0;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
};

struct MsOptions {
    double tol = 1e-10;
    int max_iterations = 16;
    int max_halvings = 6;
    double ivp_rel_tol = 1e-11;
    double ivp_abs_tol = 1e-13;
};

/// Newton solve of the periodic multiple-shooting system at fixed parameters.
/// Unknowns: nodes and period; a phase condition anchors node 0 against the
/// flow direction at the reference orbit.
MsOrbit solve_periodic(const Params& prm, const std::vector<State>& nodes0,
                       double period0, const MsOptions& opt = {});

/// One pseudo-arclength continuation step in (nodes, period, p):
/// predicts along `tangent` with step ds, corrects by Newton. Returns the
/// corrected orbit; updates `tangent` to the new secant direction.
struct ContinuationState {
    MsOrbit orbit;
    Eigen::VectorXd tangent;  ///< unit direction in (nodes, T, p), weighted
    double ds = 1e-3;
};

bool continuation_step(ContinuationState& st, const MsOptions& opt,
                       double ds_min = 1e-10, double ds_max = 0.05);

/// Sample the orbit's x1 component densely (per-segment integration, so the
/// sampling stays accurate for strongly unstable orbits). Returns maxima of
/// x1 over one period.
std::vector<double> orbit_x1_maxima(const MsOrbit& orbit, const MsOptions& opt = {},
                                    int samples_per_segment = 64);

/// Build multiple-shooting nodes from a converged cycle point by sampling one
/// (backward) loop of the flow.
std::vector<State> nodes_from_loop(const Params& prm, const State& point,
                                   double period, int n_nodes, Direction dir,
                                   const IntegratorConfig& cfg);

}  // namespace fhn
