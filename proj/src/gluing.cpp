#include "hjlab/gluing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjlab/errors.hpp"

namespace hjlab {

namespace {

constexpr double kBlend = 1.0;  // s-length of each blending zone

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }
// Integral of smoothstep over [0, t].
double smoothstep_int(double t) { return t * t * t - 0.5 * t * t * t * t; }

struct Bridge {
    double v_s, d_s, d_e, m, S, w;

    double slope(double u) const {
        if (u <= w) return d_s + (m - d_s) * smoothstep(u / w);
        if (u >= S - w) return m + (d_e - m) * smoothstep((u - (S - w)) / w);
        return m;
    }
    double value(double u) const {
        if (u <= w) return v_s + d_s * u + (m - d_s) * w * smoothstep_int(u / w);
        const double after_first = v_s + 0.5 * w * (d_s + m);
        if (u <= S - w) return after_first + m * (u - w);
        const double t = (u - (S - w)) / w;
        return after_first + m * (S - 2.0 * w) + m * (u - (S - w)) + (d_e - m) * w * smoothstep_int(t);
    }
};

std::size_t first_at_or_after(const std::vector<double>& x, double v) {
    const double eps = 1e-9 * (x.size() > 1 ? x[1] - x[0] : 1.0);
    return static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), v - eps) - x.begin());
}

std::size_t last_at_or_before(const std::vector<double>& x, double v) {
    const double eps = 1e-9 * (x.size() > 1 ? x[1] - x[0] : 1.0);
    auto it = std::upper_bound(x.begin(), x.end(), v + eps);
    require(it != x.begin(), "point lies left of the profile grid");
    return static_cast<std::size_t>(it - x.begin()) - 1;
}

}  // namespace

std::string to_string(GlueOrder order) { return order == GlueOrder::TwoToOne ? "2to1" : "1to2"; }

GlueOrder parse_glue_order(const std::string& name) {
    if (name == "2to1" || name == "2->1" || name == "21") return GlueOrder::TwoToOne;
    if (name == "1to2" || name == "1->2" || name == "12") return GlueOrder::OneToTwo;
    throw PreconditionError("unknown glue order '" + name + "' (use 2to1 or 1to2)");
}

LowSlopePoints find_low_slope_points(const CorrectorProfile& f1, const CorrectorProfile& f2,
                                     const EnvRealization& env, const Hamiltonian& G, double beta, double delta,
                                     const HillWitness& hill, GlueOrder order) {
    require(delta > 0.0 && beta > 0.0, "low-slope points need delta > 0 and beta > 0");
    require(f1.branch == Branch::Left && f2.branch == Branch::Right, "profiles must be branch 1 and branch 2");
    require(f1.x.size() == f2.x.size() && !f1.x.empty() && f1.x.front() == f2.x.front(),
            "branch profiles must share one grid");
    require(f1.x.front() <= hill.L1 + 1e-9 && f1.x.back() >= hill.L2 - 1e-9, "profiles do not cover the hill");
    if (hill.v_min_on_interval < 1.0 - delta / beta - 1e-12) {
        std::ostringstream msg;
        msg << "hill minimum V = " << hill.v_min_on_interval << " is below 1 - delta/beta = " << 1.0 - delta / beta;
        throw PreconditionError(msg.str());
    }
    const double g2b = G.branch_inverse(Branch::Right, beta);
    const double g1b = G.branch_inverse(Branch::Left, beta);
    const double need = (g2b - g1b) / delta;
    const double C = s_between(env, hill.L1, hill.L2);
    if (!(C > need)) {
        std::ostringstream msg;
        msg << "hill too short: scaled length " << C << " does not exceed (1/delta)(G2^-1(beta) - G1^-1(beta)) = "
            << need;
        throw PreconditionError(msg.str());
    }

    const auto& x = f2.x;
    const std::size_t i_lo = first_at_or_after(x, hill.L1);
    const std::size_t i_hi = last_at_or_before(x, hill.L2);
    auto low2 = [&](std::size_t i) { return G(f2.f[i]) <= 2.0 * delta; };
    auto low1 = [&](std::size_t i) { return G(f1.f[i]) <= 2.0 * delta; };
    constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::size_t i1 = npos, i2 = npos;
    if (order == GlueOrder::TwoToOne) {
        for (std::size_t i = i_lo; i <= i_hi; ++i)
            if (low2(i)) { i2 = i; break; }
        for (std::size_t i = i_hi + 1; i-- > i_lo;)
            if (low1(i)) { i1 = i; break; }
        if (i1 == npos || i2 == npos || !(i2 < i1))
            throw InvariantViolation("no ordered low-slope pair z2 < z1 found inside the hill");
    } else {
        const double b1 = -g1b / delta;
        const double b2 = g2b / delta;
        const double sL1 = env.s_at(hill.L1), sL2 = env.s_at(hill.L2);
        std::size_t x1 = npos, x2 = npos;
        for (std::size_t i = i_lo; i <= i_hi; ++i)
            if (env.s_at(x[i]) - sL1 > b1) { x1 = i; break; }
        for (std::size_t i = i_hi + 1; i-- > i_lo;)
            if (sL2 - env.s_at(x[i]) > b2) { x2 = i; break; }
        if (x1 == npos || x2 == npos || !(x1 < x2))
            throw PreconditionError("hill too short to place x1 < x2 with the required s-budgets");
        for (std::size_t i = x1 + 1; i-- > i_lo;)
            if (low1(i)) { i1 = i; break; }
        for (std::size_t i = x2; i <= i_hi; ++i)
            if (low2(i)) { i2 = i; break; }
        if (i1 == npos || i2 == npos) throw InvariantViolation("no low-slope point found inside the hill");
    }
    LowSlopePoints p;
    p.z1 = x[i1];
    p.z2 = x[i2];
    p.g1 = G(f1.f[i1]);
    p.g2 = G(f2.f[i2]);
    return p;
}

Interval residual_band(const EnvRealization& env, const Hamiltonian& G, double beta, const std::vector<double>& x,
                       const std::vector<double>& f) {
    Interval band{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t j = 1; j + 1 < f.size(); ++j) {
        const auto [a, v] = env.sample(x[j]);
        const double fp = (f[j + 1] - f[j - 1]) / (x[j + 1] - x[j - 1]);
        const double r = a * fp + G(f[j]) + beta * v;
        band.lo = std::min(band.lo, r);
        band.hi = std::max(band.hi, r);
    }
    return band;
}

std::vector<double> GluedProfile::antiderivative() const {
    std::vector<double> F(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) F[i] = F[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
    return F;
}

GluedProfile build_glued_profile(const EnvRealization& env, const Hamiltonian& G, double beta, double delta,
                                 const HillWitness& hill, GlueOrder order, double tol, double dx, double margin) {
    require(margin >= 0.0, "glue margin must be nonnegative");
    const Interval region{hill.L1 - margin, hill.L2 + margin};
    const CorrectorProfile f1 = corrector_profile(env, G, beta, beta, Branch::Left, region, tol, dx);
    const CorrectorProfile f2 = corrector_profile(env, G, beta, beta, Branch::Right, region, tol, dx);
    const LowSlopePoints pts = find_low_slope_points(f1, f2, env, G, beta, delta, hill, order);

    const bool two_one = order == GlueOrder::TwoToOne;
    const CorrectorProfile& left = two_one ? f2 : f1;
    const CorrectorProfile& right = two_one ? f1 : f2;
    const double z_s = two_one ? pts.z2 : pts.z1;
    const double z_e = two_one ? pts.z1 : pts.z2;

    const auto& x = f1.x;
    const std::size_t i_s = first_at_or_after(x, z_s);
    const std::size_t i_e = first_at_or_after(x, z_e);
    const double v_s = left.f[i_s];
    const double v_e = right.f[i_e];
    const double d_s = beta - G(v_s) - beta * env.v_at(z_s);
    const double d_e = beta - G(v_e) - beta * env.v_at(z_e);
    const double sig_s = env.s_at(z_s);
    const double S = env.s_at(z_e) - sig_s;
    if (!(S > 2.0 * kBlend)) {
        std::ostringstream msg;
        msg << "bridge s-length " << S << " leaves no room for the two blending zones";
        throw BridgeBoundsViolation(msg.str());
    }
    Bridge br{v_s, d_s, d_e, 0.0, S, kBlend};
    br.m = (v_e - v_s - 0.5 * kBlend * (d_s + d_e)) / (S - kBlend);

    GluedProfile gp;
    gp.order = order;
    gp.beta = beta;
    gp.delta = delta;
    gp.dx = dx;
    gp.z1 = pts.z1;
    gp.z2 = pts.z2;
    gp.hill = hill;
    gp.x = x;
    gp.f.resize(x.size());
    gp.bridge_slope = {std::min({d_s, d_e, br.m}), std::max({d_s, d_e, br.m})};
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j <= i_s) {
            gp.f[j] = left.f[j];
        } else if (j >= i_e) {
            gp.f[j] = right.f[j];
        } else {
            const double u = env.s_at(x[j]) - sig_s;
            gp.f[j] = br.value(u);
            const double sl = br.slope(u);
            gp.bridge_slope.lo = std::min(gp.bridge_slope.lo, sl);
            gp.bridge_slope.hi = std::max(gp.bridge_slope.hi, sl);
        }
        if (j >= i_s && j <= i_e) gp.bridge_max_G = std::max(gp.bridge_max_G, G(gp.f[j]));
    }
    const double slack = 1e-12;
    if (gp.bridge_max_G > 3.0 * delta + slack || gp.bridge_slope.lo < -2.0 * delta - slack ||
        gp.bridge_slope.hi > delta + slack) {
        std::ostringstream msg;
        msg << "bridge bounds violated: max G(g) = " << gp.bridge_max_G << " (limit " << 3.0 * delta
            << "), a g' in [" << gp.bridge_slope.lo << ", " << gp.bridge_slope.hi << "] (limits " << -2.0 * delta
            << ", " << delta << ")";
        throw BridgeBoundsViolation(msg.str());
    }
    const double budget = (G.branch_inverse(Branch::Right, 3.0 * delta) - G.branch_inverse(Branch::Left, 3.0 * delta) +
                           1.0) /
                          delta;
    gp.budget_met = S > budget;
    gp.residual_band = residual_band(env, G, beta, gp.x, gp.f);
    return gp;
}

}  // namespace hjlab
