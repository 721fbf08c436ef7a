#pragma once

#include "fhn/spectrum.hpp"

#include <optional>
#include <vector>

namespace fhn {

/// Coefficients of the geometric return-map model: the linear saddle-focus
/// field (alpha_rot, beta, gamma) plus the global-return parameters.
/// rho^{-1} is the width of the return strip and sigma its image height;
/// both are exponentially small in the slow system, here free inputs.
struct ShilnikovModelParams {
    double alpha_rot = 1.0;  ///< rotation rate, > 0
    double beta = 0.1;       ///< contraction rate, > 0
    double gamma = 1.0;      ///< expansion rate, > 0
    double lambda1 = 0.0;    ///< distance of W^u(q) ∩ Σ2 from the F21 domain
    double lambda2 = 0.0;    ///< image extension normal to W^s(q)
    double lambda3 = 0.0;    ///< v-offset of the image
    double rho = 10.0;       ///< 1/rho = domain width, > 0
    double sigma = 0.0;      ///< image height parameter, >= 0

    void validate() const {
        if (!(alpha_rot > 0 && beta > 0 && gamma > 0 && rho > 0 && sigma >= 0))
            throw Error("ShilnikovModelParams: need alpha, beta, gamma, rho > 0 and sigma >= 0");
    }
};

/// Point on one of the model cross-sections:
/// Sigma1 = {u = 0, w > 0} with coordinates (v, w);
/// Sigma2 = {w = 1} with coordinates (u, v).
struct ModelPoint {
    enum class Section { Sigma1, Sigma2 };
    Section section = Section::Sigma1;
    double a = 0.0, b = 0.0;  ///< (v, w) on Sigma1; (u, v) on Sigma2

    static ModelPoint sigma1(double v, double w) { return {Section::Sigma1, v, w}; }
    static ModelPoint sigma2(double u, double v) { return {Section::Sigma2, u, v}; }
};

/// Admissible v-interval of F12: [exp(-2 pi beta / alpha), 1].
std::pair<double, double> f12_domain(const ShilnikovModelParams& m);

/// Flow map past the saddle focus, Sigma1 -> Sigma2:
/// F12(v, w) = v w^{beta/gamma} (cos(-(alpha/gamma) ln w), sin(-(alpha/gamma) ln w)).
/// Throws DomainViolation unless w in (0, 1] and v in f12_domain (or v = 0),
/// unless check_domain is false (diagnostic mode).
ModelPoint f12(const ModelPoint& x, const ShilnikovModelParams& m,
               bool check_domain = true);

/// Global return map Sigma2 -> Sigma1:
/// (w, v) = (sigma v + lambda2 - rho^2 (u - lambda1)^2, rho (u - lambda1) + lambda3)
/// with domain [lambda1, lambda1 + 1/rho] x [-1, 1].
ModelPoint f21(const ModelPoint& x, const ShilnikovModelParams& m,
               bool check_domain = true);

/// F21 ∘ F12 when the intermediate point lands in the F21 domain;
/// otherwise the Lost outcome carrying the Sigma2 point.
struct ReturnOutcome {
    bool lost = false;
    ModelPoint point;        ///< Sigma1 image, or the Sigma2 point when lost
};

ReturnOutcome return_map(const ModelPoint& x, const ShilnikovModelParams& m);

/// The two lambda1 values with a single-pulse homoclinic orbit:
/// +- rho^{-1} sqrt(lambda2). Throws NoHomoclinic when lambda2 <= 0.
std::pair<double, double> homoclinic_parameters(const ShilnikovModelParams& m);

/// Recurrence is possible iff the image can reach {w > 0}: sigma + lambda2 > 0.
bool recurrence_check(const ShilnikovModelParams& m);

/// Periodic points of the return map up to max_period, found on a grid over
/// the admissible Sigma1 rectangle, polished by Newton to residual 1e-12 and
/// deduplicated by orbit proximity. Sorted by (period, v, w).
struct PeriodicPoint {
    int period = 1;
    double v = 0.0, w = 0.0;
    double residual = 0.0;
};

std::vector<PeriodicPoint> find_periodic_points(const ShilnikovModelParams& m,
                                                int max_period, int grid);

/// Model coefficients from the FitzHugh-Nagumo linearization at q:
/// beta = -Re(pair), alpha = |Im(pair)|, gamma = real eigenvalue.
/// The lambda's, rho, sigma are not calibrated here.
ShilnikovModelParams calibrate_from_fhn(const Params& prm);

}  // namespace fhn
