#include "fhn/slow_manifold.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace fhn {

namespace {

// Reduced field on a saddle branch with y as independent variable:
// d(x1,x2)/dy = fast_rhs * s / (eps * (x1 - y)), plus the 2x2 variational flow.
struct ReducedField {
    Params prm;
    void operator()(double y, const Eigen::Matrix<double, 2, 1>& x,
                    Eigen::Matrix<double, 2, 1>& out) const {
        const double w = prm.s / (prm.eps * (x[0] - y));
        out[0] = x[1] * w;
        out[1] = (prm.s * x[1] - cubic_f(x[0], prm.alpha_cubic) + y - prm.p) / prm.delta * w;
    }
};

struct ReducedVarField {
    Params prm;
    void operator()(double y, const Eigen::Matrix<double, 6, 1>& z,
                    Eigen::Matrix<double, 6, 1>& out) const {
        const double x1 = z[0], x2 = z[1];
        const double denom = x1 - y;
        const double w = prm.s / (prm.eps * denom);
        const double g2num = (prm.s * x2 - cubic_f(x1, prm.alpha_cubic) + y - prm.p) / prm.delta;
        out[0] = x2 * w;
        out[1] = g2num * w;
        // Jacobian of (G1, G2) w.r.t. (x1, x2)
        const double dfdx = cubic_df(x1, prm.alpha_cubic);
        const double j11 = -x2 * w / denom;
        const double j12 = w;
        const double j21 = (-dfdx / prm.delta) * w - g2num * w / denom;
        const double j22 = (prm.s / prm.delta) * w;
        // columns of the 2x2 variational matrix
        out[2] = j11 * z[2] + j12 * z[3];
        out[3] = j21 * z[2] + j22 * z[3];
        out[4] = j11 * z[4] + j12 * z[5];
        out[5] = j21 * z[4] + j22 * z[5];
    }
};

double cross2(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

// slow-flow direction of y on the branch: sign of (x1 - y)
int flow_sign(const Params& prm, Branch branch, double y) {
    const double x1 = critical_x1(y, branch, prm);
    return (x1 - y) > 0.0 ? 1 : -1;
}

}  // namespace

int recommended_node_count(const Params& prm, Branch branch, double y_lo, double y_hi,
                           double max_exponent) {
    // fast-time length of the slow passage and the largest unstable rate on it
    const int n_probe = 64;
    double total_fast = 0.0, lam_max = 0.0;
    for (int i = 0; i < n_probe; ++i) {
        const double y = y_lo + (y_hi - y_lo) * (i + 0.5) / n_probe;
        const double x1 = critical_x1(y, branch, prm);
        const double dy = (y_hi - y_lo) / n_probe;
        total_fast += std::abs(dy) * prm.s / (std::abs(x1 - y) * prm.eps);
        const auto fr = layer_saddle_frame(State(x1, 0.0, y), prm);
        lam_max = std::max(lam_max, fr.lambda_u);
    }
    const int n = static_cast<int>(std::ceil(total_fast * lam_max / max_exponent));
    return std::min(std::max(n, 4), 4000000);
}

SlowManifoldSegment compute_saddle_slow_manifold(const Params& prm, Branch branch,
                                                 double y_lo, double y_hi,
                                                 const BvpOptions& opt) {
    prm.validate();
    if (branch != Branch::Left && branch != Branch::Right)
        throw OutOfRange("compute_saddle_slow_manifold: branch must be Left or Right");
    if (!(y_lo < y_hi)) throw OutOfRange("compute_saddle_slow_manifold: empty y range");
    if (prm.eps <= 0.0) throw Error("compute_saddle_slow_manifold: eps must be > 0");

    // fold clearance
    const auto cm = critical_manifold(prm);
    const double y_fold = (branch == Branch::Left) ? critical_y(cm.fold_lo, prm)
                                                   : critical_y(cm.fold_hi, prm);
    if (branch == Branch::Left && y_lo < y_fold + 0.01) throw FoldTooClose();
    if (branch == Branch::Right && y_hi > y_fold - 0.01) throw FoldTooClose();

    // orientation: integrate segments in the slow-flow direction
    const int dir = flow_sign(prm, branch, 0.5 * (y_lo + y_hi));  // sign of dy/dt
    const double y_entry = (dir > 0) ? y_lo : y_hi;
    const double y_exit = (dir > 0) ? y_hi : y_lo;

    int n_seg = opt.n_nodes > 0 ? opt.n_nodes
                                : recommended_node_count(prm, branch, y_lo, y_hi);
    // cap the fast-time growth per segment: larger exponents push the Newton
    // correction below the linear-solve noise floor
    const int n_min = recommended_node_count(prm, branch, y_lo, y_hi, 12.0);
    if (n_seg < n_min) n_seg = n_min;

    std::vector<double> ymesh(n_seg + 1);
    for (int i = 0; i <= n_seg; ++i)
        ymesh[i] = y_entry + (y_exit - y_entry) * double(i) / n_seg;

    // initial guess: the critical manifold with the first-order x2 correction
    Eigen::VectorXd u(2 * (n_seg + 1));
    for (int i = 0; i <= n_seg; ++i) {
        const double x1 = critical_x1(ymesh[i], branch, prm);
        const double dx1dy = 1.0 / cubic_df(x1, prm.alpha_cubic);
        u[2 * i] = x1;
        u[2 * i + 1] = prm.eps * dx1dy * (x1 - ymesh[i]) / prm.s;
    }

    const State cm_entry(critical_x1(y_entry, branch, prm), 0.0, y_entry);
    const State cm_exit(critical_x1(y_exit, branch, prm), 0.0, y_exit);
    const Eigenframe fr_entry = layer_saddle_frame(cm_entry, prm);
    const Eigenframe fr_exit = layer_saddle_frame(cm_exit, prm);

    ReducedVarField rv{prm};
    const int m = 2 * (n_seg + 1);
    Eigen::VectorXd resid(m);
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::SparseMatrix<double> jac(m, m);

    auto segment_flow = [&](int i, const Vec2& x, Mat2& phi) -> Vec2 {
        Eigen::Matrix<double, 6, 1> z;
        z << x[0], x[1], 1.0, 0.0, 0.0, 1.0;
        z = integrate_end<6>(rv, ymesh[i], z, ymesh[i + 1], opt.ivp_rel_tol,
                             opt.ivp_abs_tol);
        phi << z[2], z[4], z[3], z[5];
        return Vec2(z[0], z[1]);
    };

    auto assemble = [&](const Eigen::VectorXd& v, bool with_jac) -> double {
        if (with_jac) trips.clear();
        double rmax = 0.0;
        for (int i = 0; i < n_seg; ++i) {
            Mat2 phi;
            const Vec2 xi(v[2 * i], v[2 * i + 1]);
            const Vec2 xe = segment_flow(i, xi, phi);
            const Vec2 r = xe - Vec2(v[2 * (i + 1)], v[2 * (i + 1) + 1]);
            resid[2 * i] = r[0];
            resid[2 * i + 1] = r[1];
            rmax = std::max({rmax, std::abs(r[0]), std::abs(r[1])});
            if (with_jac) {
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b)
                        trips.emplace_back(2 * i + a, 2 * i + b, phi(a, b));
                    trips.emplace_back(2 * i + a, 2 * (i + 1) + a, -1.0);
                }
            }
        }
        // boundary rows: start on cm_entry + span(e_u), end on cm_exit + span(e_s)
        const Vec2 d0(v[0] - cm_entry[0], v[1] - cm_entry[1]);
        const Vec2 dn(v[2 * n_seg] - cm_exit[0], v[2 * n_seg + 1] - cm_exit[1]);
        resid[2 * n_seg] = cross2(fr_entry.e_u, d0);
        resid[2 * n_seg + 1] = cross2(fr_exit.e_s, dn);
        rmax = std::max({rmax, std::abs(resid[2 * n_seg]), std::abs(resid[2 * n_seg + 1])});
        if (with_jac) {
            trips.emplace_back(2 * n_seg, 0, -fr_entry.e_u[1]);
            trips.emplace_back(2 * n_seg, 1, fr_entry.e_u[0]);
            trips.emplace_back(2 * n_seg + 1, 2 * n_seg, -fr_exit.e_s[1]);
            trips.emplace_back(2 * n_seg + 1, 2 * n_seg + 1, fr_exit.e_s[0]);
        }
        return rmax;
    };

    auto try_assemble = [&](const Eigen::VectorXd& v, bool with_jac) -> double {
        // a singular trial (x1 crossing the y level) shows up as step underflow
        try {
            return assemble(v, with_jac);
        } catch (const StepSizeUnderflow&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    double rmax = try_assemble(u, false);
    int iters = 0;
    for (; iters < opt.max_iterations && rmax > opt.tol; ++iters) {
        if (!std::isfinite(rmax)) throw NewtonDivergence(rmax);
        assemble(u, true);
        jac.setFromTriplets(trips.begin(), trips.end());
        lu.compute(jac);
        if (lu.info() != Eigen::Success) throw NewtonDivergence(rmax);
        const Eigen::VectorXd step = lu.solve(-resid);
        double lambda = 1.0;
        double rnew = rmax;
        int halvings = 0;
        for (; halvings <= opt.max_halvings; ++halvings) {
            const Eigen::VectorXd trial = u + lambda * step;
            rnew = try_assemble(trial, false);
            if (rnew < rmax || rnew <= opt.tol) { u = trial; break; }
            lambda *= 0.5;
        }
        if (opt.verbose)
            std::fprintf(stderr, "bvp newton it=%d rmax=%.3e -> %.3e halvings=%d\n",
                         iters, rmax, rnew, halvings);
        if (halvings > opt.max_halvings) throw NewtonDivergence(rmax);
        rmax = rnew;
    }
    if (rmax > opt.tol) throw NewtonDivergence(rmax);

    SlowManifoldSegment seg;
    seg.branch = branch;
    seg.params = prm;
    seg.newton_residual = rmax;
    seg.newton_iterations = iters;
    seg.y_nodes = ymesh;
    seg.samples.reserve(n_seg + 1);
    seg.frames.reserve(n_seg + 1);
    for (int i = 0; i <= n_seg; ++i) {
        const State sample(u[2 * i], u[2 * i + 1], ymesh[i]);
        seg.samples.push_back(sample);
        seg.frames.push_back(layer_saddle_frame(sample, prm));
    }

    // assemble the y-parametrized trajectory (x1, x2, t over y) and from it
    // the time-parametrized one
    {
        struct AssembleField {
            Params prm;
            void operator()(double y, const State& z, State& out) const {
                const double w = prm.s / (prm.eps * (z[0] - y));
                out[0] = z[1] * w;
                out[1] = (prm.s * z[1] - cubic_f(z[0], prm.alpha_cubic) + y - prm.p) /
                         prm.delta * w;
                out[2] = prm.s / (z[0] - y);  // dt/dy on the slow time scale
            }
        } af{prm};

        std::vector<double> ys;
        std::vector<State> zs;
        std::vector<DenseStep> dsteps;
        double t_accum = 0.0;
        for (int i = 0; i < n_seg; ++i) {
            State z(u[2 * i], u[2 * i + 1], t_accum);
            IntegratorConfig icfg;
            icfg.rel_tol = opt.ivp_rel_tol;
            icfg.abs_tol = opt.ivp_abs_tol;
            icfg.max_time = std::abs(ymesh[i + 1] - ymesh[i]);
            icfg.escape_radius = 1e6;
            const Direction d = (ymesh[i + 1] > ymesh[i]) ? Direction::Forward
                                                          : Direction::Backward;
            Trajectory piece = integrate_field(af, z, ymesh[i], d, icfg);
            const std::size_t base = ys.empty() ? 0 : 1;
            for (std::size_t k = base == 1 ? 1 : 0; k < piece.size(); ++k) {
                ys.push_back(piece.times()[k]);
                zs.push_back(piece.states()[k]);
            }
            for (std::size_t k = 0; k < piece.n_steps(); ++k) dsteps.push_back(piece.step(k));
            // re-anchor the next segment on the converged node values
            t_accum = piece.back()[2];
        }
        seg.y_param = Trajectory(std::move(ys), std::move(zs), std::move(dsteps),
                                 Termination::HorizonReached);

        // time-parametrized nodes with Hermite dense segments
        std::vector<double> ts;
        std::vector<State> xs;
        std::vector<DenseStep> hsteps;
        FhnField full{prm, TimeScale::Slow};
        for (std::size_t k = 0; k < seg.y_param.size(); ++k) {
            const double y = seg.y_param.times()[k];
            const State& z = seg.y_param.states()[k];
            ts.push_back(z[2]);
            xs.push_back(State(z[0], z[1], y));
        }
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
            State f0, f1;
            full(ts[k], xs[k], f0);
            full(ts[k + 1], xs[k + 1], f1);
            hsteps.push_back(DenseStep::hermite(ts[k], ts[k + 1] - ts[k], xs[k],
                                                xs[k + 1], f0, f1));
        }
        seg.trajectory = Trajectory(std::move(ts), std::move(xs), std::move(hsteps),
                                    Termination::HorizonReached);
    }
    return seg;
}

std::pair<State, Eigenframe> section_point(const SlowManifoldSegment& seg,
                                           double y_section) {
    if (y_section < seg.y_min() - 1e-12 || y_section > seg.y_max() + 1e-12)
        throw OutOfRange("section_point: y outside the segment range");
    // exact node hit keeps the interpolation identity
    for (std::size_t i = 0; i < seg.y_nodes.size(); ++i) {
        if (seg.y_nodes[i] == y_section)
            return {seg.samples[i], seg.frames[i]};
    }
    const State z = seg.y_param.eval(y_section);
    const State pt(z[0], z[1], y_section);
    return {pt, layer_saddle_frame(pt, seg.params)};
}

Trajectory middle_branch_backward(const Params& prm, double x1_seed,
                                  const IntegratorConfig& cfg) {
    const auto cm = critical_manifold(prm);
    if (!(x1_seed > cm.fold_lo && x1_seed < cm.fold_hi))
        throw OutOfRange("middle_branch_backward: seed not strictly between the folds");
    const State start(x1_seed, 0.0, critical_y(x1_seed, prm));
    return integrate_field(FhnField{prm, TimeScale::Slow}, start, 0.0,
                           Direction::Backward, cfg);
}

ManifoldMesh manifold_mesh(const SlowManifoldSegment& seg, ManifoldSide side,
                           double offset, int n, const IntegratorConfig& cfg) {
    if (!(offset >= 0.0 && offset <= 1e-2))
        throw OutOfRange("manifold_mesh: offset must lie in [0, 1e-2]");
    ManifoldMesh mesh;
    mesh.side = side;
    mesh.offset = offset;
    mesh.params = seg.params;
    const std::size_t nsamp = seg.samples.size();
    for (int k = 0; k < n; ++k) {
        const std::size_t i = (n == 1) ? 0 : (k / 2) * (nsamp - 1) / std::max(1, (n - 1) / 2);
        const int sign = (k % 2 == 0) ? +1 : -1;
        const Eigenframe& fr = seg.frames[std::min(i, nsamp - 1)];
        const Vec2 e = (side == ManifoldSide::Stable) ? fr.e_s : fr.e_u;
        State seed = seg.samples[std::min(i, nsamp - 1)];
        seed[0] += sign * offset * e[0];
        seed[1] += sign * offset * e[1];
        mesh.seeds.push_back(seed);
        mesh.seed_signs.push_back(sign);
        mesh.seed_y.push_back(seed[2]);
        const Direction dir = (side == ManifoldSide::Stable) ? Direction::Backward
                                                             : Direction::Forward;
        try {
            // node storage: drop the dense blocks to keep meshes light
            Trajectory tr = integrate_field(FhnField{seg.params, TimeScale::Slow},
                                            seed, 0.0, dir, cfg);
            std::vector<double> ts(tr.times());
            std::vector<State> xs(tr.states());
            mesh.trajectories.emplace_back(std::move(ts), std::move(xs),
                                           std::vector<DenseStep>{}, tr.termination());
            mesh.errors.emplace_back();
        } catch (const Error& e) {
            mesh.trajectories.emplace_back();
            mesh.errors.emplace_back(e.what());
        }
    }
    return mesh;
}

MeshSectionTrace mesh_section_trace(const ManifoldMesh& mesh, double y_section,
                                    const IntegratorConfig& cfg) {
    MeshSectionTrace out;
    const Direction dir = (mesh.side == ManifoldSide::Stable) ? Direction::Backward
                                                              : Direction::Forward;
    for (std::size_t k = 0; k < mesh.seeds.size(); ++k) {
        if (!mesh.errors[k].empty()) continue;
        const SectionOutcome so = integrate_to_section(mesh.params, mesh.seeds[k], dir,
                                                       y_section, cfg);
        if (so.kind != Termination::SectionHit) continue;
        out.seed_param.push_back(mesh.seed_signs[k] * mesh.seed_y[k]);
        out.points.emplace_back(so.event.state[0], so.event.state[1]);
    }
    return out;
}

namespace {

// closest approach / crossing of two polylines with local tangent angle
struct CurveMeet {
    double gap = std::numeric_limits<double>::max();
    double angle = 0.0;
};

CurveMeet polyline_meet(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    CurveMeet best;
    auto seg_angle = [](const Vec2& t1, const Vec2& t2) {
        const double c = std::abs(t1.normalized().dot(t2.normalized()));
        return std::acos(std::clamp(c, 0.0, 1.0));
    };
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        const Vec2 p = a[i], r = a[i + 1] - a[i];
        for (std::size_t j = 0; j + 1 < b.size(); ++j) {
            const Vec2 q = b[j], s = b[j + 1] - b[j];
            const double denom = r[0] * s[1] - r[1] * s[0];
            if (std::abs(denom) > 1e-300) {
                const Vec2 qp = q - p;
                const double t = (qp[0] * s[1] - qp[1] * s[0]) / denom;
                const double u2 = (qp[0] * r[1] - qp[1] * r[0]) / denom;
                if (t >= 0.0 && t <= 1.0 && u2 >= 0.0 && u2 <= 1.0) {
                    best.gap = 0.0;
                    best.angle = seg_angle(r, s);
                    return best;
                }
            }
            // nearest approach between segment midpoints as a fallback metric
            const double d = (p + 0.5 * r - q - 0.5 * s).norm();
            if (d < best.gap) {
                best.gap = d;
                best.angle = seg_angle(r, s);
            }
        }
    }
    return best;
}

}  // namespace

double transversality_check(const MeshSectionTrace& a, const MeshSectionTrace& b,
                            double gap_tol) {
    if (a.points.size() < 2 || b.points.size() < 2)
        throw NoIntersection();
    const CurveMeet m = polyline_meet(a.points, b.points);
    if (m.gap > gap_tol) throw NoIntersection();
    return m.angle;
}

double transversality_check(const ManifoldMesh& mesh_a, const ManifoldMesh& mesh_b,
                            double y_section, const IntegratorConfig& cfg,
                            double gap_tol) {
    return transversality_check(mesh_section_trace(mesh_a, y_section, cfg),
                                mesh_section_trace(mesh_b, y_section, cfg), gap_tol);
}

void write_segment_json(const SlowManifoldSegment& seg, const std::string& path) {
    nlohmann::json j;
    j["branch"] = seg.branch == Branch::Left ? "left"
                 : seg.branch == Branch::Right ? "right" : "middle";
    j["params"] = {{"p", seg.params.p}, {"s", seg.params.s},
                   {"delta", seg.params.delta}, {"alpha", seg.params.alpha_cubic},
                   {"eps", seg.params.eps}};
    j["newton_residual"] = seg.newton_residual;
    auto& samples = j["samples"] = nlohmann::json::array();
    for (std::size_t i = 0; i < seg.samples.size(); ++i) {
        const auto& s = seg.samples[i];
        const auto& f = seg.frames[i];
        samples.push_back({{"y", seg.y_nodes[i]},
                           {"x1", s[0]},
                           {"x2", s[1]},
                           {"lambda_s", f.lambda_s},
                           {"lambda_u", f.lambda_u},
                           {"e_s", {f.e_s[0], f.e_s[1]}},
                           {"e_u", {f.e_u[0], f.e_u[1]}}});
    }
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    os << std::setw(1) << j << "\n";
}

void write_mesh_csv(const ManifoldMesh& mesh, const std::string& dir,
                    const std::string& stem) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / (stem + "_manifest.csv"));
    manifest << "index,seed_x1,seed_x2,seed_y,sign,file,error\n" << std::setprecision(16);
    for (std::size_t k = 0; k < mesh.trajectories.size(); ++k) {
        const std::string fname = stem + "_" + std::to_string(k) + ".csv";
        manifest << k << ',' << mesh.seeds[k][0] << ',' << mesh.seeds[k][1] << ','
                 << mesh.seeds[k][2] << ',' << mesh.seed_signs[k] << ',' << fname << ','
                 << mesh.errors[k] << '\n';
        if (mesh.errors[k].empty())
            write_trajectory_csv(mesh.trajectories[k], (fs::path(dir) / fname).string());
    }
}

}  // namespace fhn
