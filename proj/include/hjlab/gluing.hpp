#pragma once

#include <string>
#include <vector>

#include "hjlab/corrector.hpp"
#include "hjlab/environment.hpp"
#include "hjlab/hamiltonian.hpp"

namespace hjlab {

/// TwoToOne: f2 left of z2, bridge, f1 right of z1 (z2 < z1).
/// OneToTwo: f1 left of z1, bridge, f2 right of z2 (z1 < z2).
enum class GlueOrder { TwoToOne, OneToTwo };

std::string to_string(GlueOrder order);
GlueOrder parse_glue_order(const std::string& name);

struct LowSlopePoints {
    double z1 = 0.0;
    double z2 = 0.0;
    double g1 = 0.0;  // G(f1(z1))
    double g2 = 0.0;  // G(f2(z2))
};

/// Low-slope points of the lambda = beta correctors inside a hill. f1 and f2
/// must share one grid covering the hill.
LowSlopePoints find_low_slope_points(const CorrectorProfile& f1, const CorrectorProfile& f2,
                                     const EnvRealization& env, const Hamiltonian& G, double beta, double delta,
                                     const HillWitness& hill, GlueOrder order);

struct GluedProfile {
    GlueOrder order = GlueOrder::TwoToOne;
    double beta = 0.0;
    double delta = 0.0;
    double dx = 0.0;
    double z1 = 0.0;
    double z2 = 0.0;
    HillWitness hill;
    std::vector<double> x;
    std::vector<double> f;
    Interval residual_band{};  // min/max of a f' + G(f) + beta V over interior points
    double bridge_max_G = 0.0;
    Interval bridge_slope{};   // range of a g' on the bridge
    bool budget_met = false;   // s(z_end) - s(z_start) exceeds the bridge budget (1/delta)(G2^-1(3d) - G1^-1(3d) + 1)

    std::vector<double> antiderivative() const;
    bool band_within(double tol) const {
        return residual_band.lo >= beta - 3.0 * delta - tol && residual_band.hi <= beta + 4.0 * delta + tol;
    }
};

/// Builds the glued lambda = beta profile over [L1 - margin, L2 + margin]:
/// correctors at lambda = beta, low-slope points, and a bridge that is affine
/// in s with smoothstep blending of a g' over s-length 1 at each end.
GluedProfile build_glued_profile(const EnvRealization& env, const Hamiltonian& G, double beta, double delta,
                                 const HillWitness& hill, GlueOrder order, double tol, double dx, double margin = 2.0);

/// Interior residual band of a derivative profile f on a uniform grid.
Interval residual_band(const EnvRealization& env, const Hamiltonian& G, double beta, const std::vector<double>& x,
                       const std::vector<double>& f);

}  // namespace hjlab
