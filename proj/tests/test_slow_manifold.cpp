#include <doctest.h>

#include "fhn/slow_manifold.hpp"

using namespace fhn;

namespace {

Params reference_params(double eps = 1e-2) {
    Params prm;
    prm.p = 0.05;
    prm.s = 1.37;
    prm.eps = eps;
    return prm;
}

// distance of the segment samples to the critical manifold in (x1, x2)
double max_distance_to_c0(const SlowManifoldSegment& seg) {
    double dmax = 0.0;
    for (const auto& x : seg.samples) {
        const double x1c = critical_x1(x[2], seg.branch, seg.params);
        dmax = std::max(dmax, std::hypot(x[0] - x1c, x[1]));
    }
    return dmax;
}

}  // namespace

TEST_CASE("left slow manifold: distance to C_0 is O(eps)") {
    const SlowManifoldSegment seg =
        compute_saddle_slow_manifold(reference_params(), Branch::Left, 0.06, 0.12);
    CHECK(seg.newton_residual <= 1e-9);
    const double d2 = max_distance_to_c0(seg);
    CHECK(d2 < 0.05);

    const SlowManifoldSegment seg3 =
        compute_saddle_slow_manifold(reference_params(1e-3), Branch::Left, 0.06, 0.12);
    CHECK(seg3.newton_residual <= 1e-9);
    const double d3 = max_distance_to_c0(seg3);
    const double shrink = d2 / d3;
    CHECK(shrink > 5.0);
    CHECK(shrink < 20.0);

    // scaling bracket for distance/eps at both eps values
    for (const auto* s : {&seg, &seg3}) {
        const double r = max_distance_to_c0(*s) / s->params.eps;
        CHECK(r > 0.01);
        CHECK(r < 100.0);
    }

    // y strictly monotone along the segment
    for (std::size_t i = 0; i + 1 < seg.y_nodes.size(); ++i)
        CHECK((seg.y_nodes[i + 1] - seg.y_nodes[i]) * (seg.y_nodes[1] - seg.y_nodes[0]) > 0.0);
}

TEST_CASE("eps -> 0 limit: samples approach the critical manifold") {
    const SlowManifoldSegment seg =
        compute_saddle_slow_manifold(reference_params(1e-6), Branch::Left, 0.06, 0.12);
    CHECK(max_distance_to_c0(seg) < 1e-4);
}

TEST_CASE("right branch solves as well") {
    const SlowManifoldSegment seg =
        compute_saddle_slow_manifold(reference_params(), Branch::Right, 0.06, 0.14);
    CHECK(seg.newton_residual <= 1e-9);
    CHECK(max_distance_to_c0(seg) < 0.05);
    for (const auto& fr : seg.frames) {
        CHECK(fr.lambda_s < 0.0);
        CHECK(fr.lambda_u > 0.0);
    }
}

TEST_CASE("fold clearance is enforced") {
    Params prm = reference_params();
    const auto cm = critical_manifold(prm);
    const double y_fold = critical_y(cm.fold_lo, prm);
    CHECK_THROWS_AS(
        compute_saddle_slow_manifold(prm, Branch::Left, y_fold + 0.005, 0.12),
        FoldTooClose);
}

TEST_CASE("section_point: node identity, saddle frame, frame residual") {
    const SlowManifoldSegment seg =
        compute_saddle_slow_manifold(reference_params(), Branch::Left, 0.06, 0.12);

    // exact node y returns that node
    const std::size_t mid = seg.y_nodes.size() / 2;
    const auto [pt, fr] = section_point(seg, seg.y_nodes[mid]);
    CHECK((pt - seg.samples[mid]).norm() == 0.0);

    const auto [pl, frame] = section_point(seg, 0.09);
    CHECK(frame.lambda_s < 0.0);
    CHECK(frame.lambda_u > 0.0);
    const Mat2 j = layer_jacobian(pl[0], seg.params);
    CHECK((j * frame.e_s - frame.lambda_s * frame.e_s).norm() <= 1e-10);
    CHECK((j * frame.e_u - frame.lambda_u * frame.e_u).norm() <= 1e-10);

    CHECK_THROWS_AS(section_point(seg, 0.3), OutOfRange);
}

TEST_CASE("slow-flow tracking: section event from a manifold point") {
    // a point of C_{l,eps} at y = 0.10 tracks the manifold down to y = 0.09
    const Params prm = reference_params();
    const SlowManifoldSegment seg =
        compute_saddle_slow_manifold(prm, Branch::Left, 0.06, 0.12);
    const auto [start, fr0] = section_point(seg, 0.10);
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    const SectionOutcome so =
        integrate_to_section(prm, start, Direction::Forward, 0.09, cfg);
    REQUIRE(so.kind == Termination::SectionHit);
    CHECK(std::abs(so.event.state[2] - 0.09) <= 1e-10);
    const auto [pl, fr] = section_point(seg, 0.09);
    CHECK((so.event.state - pl).norm() < 1e-3);
}

TEST_CASE("middle branch backward: attraction to C_m and seed coherence") {
    Params prm;
    prm.p = 0.05;
    prm.s = 1.2;
    prm.eps = 1e-2;
    const auto cm = critical_manifold(prm);
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    cfg.max_time = 200.0;

    const double mid = 0.5 * (cm.fold_lo + cm.fold_hi);
    const Trajectory tr = middle_branch_backward(prm, mid, cfg);
    CHECK(tr.termination() != Termination::SectionHit);

    // minimum distance to C_m over the middle y-range
    double dmin = 1e9;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const State& x = tr.states()[i];
        if (cm.classify(x[0]) != Branch::Middle) continue;
        const double x1c = critical_x1(x[2], Branch::Middle, prm);
        dmin = std::min(dmin, std::hypot(x[0] - x1c, x[1]));
    }
    CHECK(dmin <= 0.05);

    // two distinct seeds converge backward onto the same slow manifold
    const double xa = cm.fold_lo + 0.45 * (cm.fold_hi - cm.fold_lo);
    const double xb = cm.fold_lo + 0.55 * (cm.fold_hi - cm.fold_lo);
    const Trajectory ta = middle_branch_backward(prm, xa, cfg);
    const Trajectory tb = middle_branch_backward(prm, xb, cfg);
    // compare at equal y while both still run along the middle branch
    double closest = 1e9;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        const State& x = ta.states()[i];
        if (cm.classify(x[0]) != Branch::Middle) continue;
        const double y = x[2];
        for (std::size_t j = 0; j + 1 < tb.size(); ++j) {
            const double y0 = tb.states()[j][2], y1 = tb.states()[j + 1][2];
            if ((y0 - y) * (y1 - y) <= 0.0 && y0 != y1) {
                const double w = (y - y0) / (y1 - y0);
                const Vec2 xb_at =
                    (tb.states()[j] * (1.0 - w) + tb.states()[j + 1] * w).head<2>();
                closest = std::min(closest, (x.head<2>() - xb_at).norm());
            }
        }
    }
    CHECK(closest < 1e-6);

    CHECK_THROWS_AS(middle_branch_backward(prm, cm.fold_lo - 0.01, cfg), OutOfRange);
}

TEST_CASE("manifold mesh: seeds, escape behaviour, side separation") {
    const Params prm = reference_params();
    const SlowManifoldSegment seg =
        compute_saddle_slow_manifold(prm, Branch::Left, 0.06, 0.12);
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    cfg.max_time = 30.0;

    SUBCASE("offset zero tracks the manifold") {
        ManifoldMesh mesh = manifold_mesh(seg, ManifoldSide::Unstable, 0.0, 4, cfg);
        for (std::size_t k = 0; k < mesh.seeds.size(); ++k) {
            REQUIRE(mesh.errors[k].empty());
            bool matched = false;
            for (const auto& s : seg.samples)
                if ((mesh.seeds[k] - s).norm() == 0.0) matched = true;
            CHECK(matched);
        }
    }

    SUBCASE("unstable mesh leaves in fast time") {
        ManifoldMesh mesh = manifold_mesh(seg, ManifoldSide::Unstable, 1e-4, 6, cfg);
        int left_fast = 0;
        for (std::size_t k = 0; k < mesh.trajectories.size(); ++k) {
            if (!mesh.errors[k].empty()) continue;
            const Trajectory& tr = mesh.trajectories[k];
            for (std::size_t i = 0; i < tr.size(); ++i) {
                const Vec2 d(tr.states()[i][0] - mesh.seeds[k][0],
                             tr.states()[i][1] - mesh.seeds[k][1]);
                if (d.norm() > 0.05) {
                    if (std::abs(tr.times()[i]) < 1.0) ++left_fast;
                    break;
                }
            }
        }
        CHECK(left_fast >= 5);
    }

    SUBCASE("stable mesh separates into two components") {
        ManifoldMesh mesh = manifold_mesh(seg, ManifoldSide::Stable, 1e-4, 8, cfg);
        int side_a = 0, side_b = 0;
        for (std::size_t k = 0; k < mesh.trajectories.size(); ++k) {
            if (!mesh.errors[k].empty()) continue;
            const State& last = mesh.trajectories[k].back();
            const double x1c = critical_x1(std::clamp(last[2], 0.061, 0.119),
                                           Branch::Left, prm);
            if (last[0] < x1c - 1e-3) ++side_a;
            else ++side_b;
        }
        CHECK(side_a > 0);
        CHECK(side_b > 0);
    }

    CHECK_THROWS_AS(manifold_mesh(seg, ManifoldSide::Stable, 0.5, 4, cfg), OutOfRange);
}

TEST_CASE("transversality: synthetic orthogonal families") {
    MeshSectionTrace a, b;
    for (int i = 0; i <= 10; ++i) {
        const double t = -1.0 + 0.2 * i;
        a.seed_param.push_back(t);
        a.points.emplace_back(t, 0.0);
        b.seed_param.push_back(t);
        b.points.emplace_back(0.0, t);
    }
    const double ang = transversality_check(a, b);
    CHECK(ang == doctest::Approx(M_PI / 2).epsilon(1e-6));

    // identical traces: tangency signal
    const double ang2 = transversality_check(a, a);
    CHECK(ang2 < 1e-3);

    // disjoint traces
    MeshSectionTrace c = b;
    for (auto& ptc : c.points) ptc[0] += 10.0;
    CHECK_THROWS_AS(transversality_check(a, c), NoIntersection);
}

TEST_CASE("W^s(C_l) and W^u(C_r) intersect transversally on the section") {
    // parameters on the splitting-curve extension near s = 1.4
    Params prm;
    prm.p = 0.0467;
    prm.s = 1.4;
    prm.eps = 1e-2;
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    cfg.max_time = 40.0;
    const SlowManifoldSegment left =
        compute_saddle_slow_manifold(prm, Branch::Left, 0.065, 0.12);
    const SlowManifoldSegment right =
        compute_saddle_slow_manifold(prm, Branch::Right, 0.05, 0.15);
    ManifoldMesh ws = manifold_mesh(left, ManifoldSide::Stable, 1e-4, 40, cfg);
    ManifoldMesh wu = manifold_mesh(right, ManifoldSide::Unstable, 1e-4, 40, cfg);
    const double angle = transversality_check(ws, wu, 0.09, cfg, 2e-2);
    CHECK(angle > 1e-2);
}
