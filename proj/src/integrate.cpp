#include "fhn/integrate.hpp"

#include <fstream>
#include <iomanip>

namespace fhn {

Trajectory integrate(RhsSelector sel, const Params& prm, const State& start,
                     Direction dir, const IntegratorConfig& cfg,
                     const LinearModelField* model) {
    switch (sel) {
        case RhsSelector::Full:
            return integrate_field(FhnField{prm, TimeScale::Slow}, start, 0.0, dir, cfg);
        case RhsSelector::Layer:
            return integrate_field(LayerField{prm}, start, 0.0, dir, cfg);
        case RhsSelector::ModelLinear:
            if (!model) throw Error("integrate: ModelLinear requires model coefficients");
            return integrate_field(*model, start, 0.0, dir, cfg);
    }
    throw Error("integrate: unknown selector");
}

SectionOutcome integrate_to_section(const Params& prm, const State& start,
                                    Direction dir, double y_section,
                                    const IntegratorConfig& cfg, TimeScale scale,
                                    int want_sign) {
    return run_to_section(FhnField{prm, scale}, start, 0.0, dir, y_section, cfg,
                          want_sign);
}

void write_trajectory_csv(const Trajectory& tr, const std::string& path,
                          const std::string& header_comment) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "t,x1,x2,y\n" << std::setprecision(16);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const State& x = tr.states()[i];
        os << tr.times()[i] << ',' << x[0] << ',' << x[1] << ',' << x[2] << '\n';
    }
}

}  // namespace fhn
