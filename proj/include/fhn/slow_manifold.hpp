#pragma once

#include "fhn/integrate.hpp"
#include "fhn/spectrum.hpp"

#include <optional>
#include <vector>

namespace fhn {

/// A computed piece of a slow manifold branch: mesh samples with layer
/// eigenframes plus the underlying boundary-value trajectory, parametrized
/// both by time and by y (y is strictly monotone along the segment).
struct SlowManifoldSegment {
    Branch branch = Branch::Left;
    Params params;
    std::vector<double> y_nodes;          ///< mesh levels, ordered in flow direction
    std::vector<State> samples;           ///< (x1, x2, y) at the mesh levels
    std::vector<Eigenframe> frames;       ///< saddle frames of the layer subsystem
    Trajectory y_param;                   ///< "time" = y, states = (x1, x2, t)
    Trajectory trajectory;                ///< time-parametrized BVP trajectory
    double newton_residual = 0.0;         ///< final max-norm shooting residual
    int newton_iterations = 0;

    double y_min() const { return std::min(y_nodes.front(), y_nodes.back()); }
    double y_max() const { return std::max(y_nodes.front(), y_nodes.back()); }
};

struct BvpOptions {
    int n_nodes = 100;          ///< shooting segments; 0 selects a growth-bounded count
    double tol = 1e-9;          ///< Newton residual target (max norm)
    double ivp_rel_tol = 1e-12; ///< per-segment integration tolerances
    double ivp_abs_tol = 1e-13;
    int max_iterations = 30;
    int max_halvings = 8;
    bool verbose = false;
};

/// Growth-bounded segment count: caps the fast-time expansion per shooting
/// segment so the variational blocks stay well conditioned.
int recommended_node_count(const Params& prm, Branch branch, double y_lo, double y_hi,
                           double max_exponent = 10.0);

/// Saddle slow manifold C_{l,eps} or C_{r,eps} over [y_lo, y_hi] by multiple
/// shooting with y as the independent variable. Boundary conditions: the
/// trajectory starts on the line through the critical manifold entry point
/// spanned by the layer e_u, and ends on the line spanned by e_s.
SlowManifoldSegment compute_saddle_slow_manifold(const Params& prm, Branch branch,
                                                 double y_lo, double y_hi,
                                                 const BvpOptions& opt = {});

/// Interpolated manifold point at the section plus the layer frame there.
std::pair<State, Eigenframe> section_point(const SlowManifoldSegment& seg,
                                           double y_section);

/// Backward-time trajectory from the critical-manifold point at x1_seed on
/// the middle branch. In backward time C_m is attracting, so the trajectory
/// converges to C_{m,eps} and continues past the left fold.
Trajectory middle_branch_backward(const Params& prm, double x1_seed,
                                  const IntegratorConfig& cfg);

enum class ManifoldSide { Stable, Unstable };

/// Family of trajectories seeded off a slow-manifold segment along the fast
/// eigenvectors: e_s seeds integrate backward (W^s), e_u seeds forward (W^u).
/// Seeds alternate the +/- side of the manifold.
struct ManifoldMesh {
    ManifoldSide side = ManifoldSide::Stable;
    double offset = 1e-4;
    Params params;
    std::vector<State> seeds;
    std::vector<int> seed_signs;
    std::vector<double> seed_y;
    std::vector<Trajectory> trajectories;  ///< node storage only
    std::vector<std::string> errors;       ///< per-trajectory failures, recorded not fatal
};

ManifoldMesh manifold_mesh(const SlowManifoldSegment& seg, ManifoldSide side,
                           double offset, int n, const IntegratorConfig& cfg);

/// Ordered intersection curve of a mesh with the section y = y_section.
/// Points are localized by rerunning each seed to the section on dense output.
struct MeshSectionTrace {
    std::vector<double> seed_param;  ///< y of the seed, signed by side
    std::vector<Vec2> points;        ///< (x1, x2) on the section
};

MeshSectionTrace mesh_section_trace(const ManifoldMesh& mesh, double y_section,
                                    const IntegratorConfig& cfg);

/// Crossing angle between two mesh traces on a shared section. Throws
/// NoIntersection when the traces stay apart beyond `gap_tol`.
double transversality_check(const MeshSectionTrace& a, const MeshSectionTrace& b,
                            double gap_tol = 1e-3);

double transversality_check(const ManifoldMesh& mesh_a, const ManifoldMesh& mesh_b,
                            double y_section, const IntegratorConfig& cfg,
                            double gap_tol = 1e-3);

/// Exports: one CSV per trajectory plus a manifest, and a JSON document with
/// samples and eigenframes.
void write_segment_json(const SlowManifoldSegment& seg, const std::string& path);
void write_mesh_csv(const ManifoldMesh& mesh, const std::string& dir,
                    const std::string& stem);

}  // namespace fhn
