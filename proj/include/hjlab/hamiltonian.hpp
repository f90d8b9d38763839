#pragma once

#include <cmath>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hjlab/environment.hpp"

namespace hjlab {

/// Branch 1 is G restricted to (-inf, 0] (strictly decreasing),
/// branch 2 is G restricted to [0, +inf) (strictly increasing).
enum class Branch { Left = 1, Right = 2 };

inline Branch other(Branch b) { return b == Branch::Left ? Branch::Right : Branch::Left; }
Branch parse_branch(int i);

enum class GFamily { Power, AsymPower, LogQuasiconvex, Tabulated };

/// Two-sided growth certificate: c1|p|^g - 1/c1 <= G(p) <= c2(|p|^g + 1).
struct GrowthCertificate {
    double gamma = 2.0;
    double c1 = 1.0;
    double c2 = 1.0;
};

/// One branch of a tabulated G, sorted by |p| ascending and starting at (0, 0).
struct BranchTable {
    std::vector<double> p;
    std::vector<double> g;
};

/// Two-column `p,G(p)` text, one row per line; '#' lines are skipped.
BranchTable read_branch_table(std::istream& is);

/// The spatially homogeneous part G of the Hamiltonian G(p) + beta V(x):
/// coercive, G(0) = 0, strictly decreasing on (-inf,0], strictly increasing on [0,inf).
class Hamiltonian {
public:
    static Hamiltonian power(double gamma);
    static Hamiltonian asym_power(double gamma_left, double gamma_right);
    static Hamiltonian log_quasiconvex();
    /// Monotonicity and G(0) = 0 are validated at load; linear extrapolation past the ends.
    static Hamiltonian tabulated(BranchTable left, BranchTable right);

    GFamily family() const { return family_; }
    std::string name() const;
    double gamma_left() const { return gamma_left_; }
    double gamma_right() const { return gamma_right_; }

    double operator()(double p) const {
        switch (family_) {
            case GFamily::Power:
            case GFamily::AsymPower: {
                const double g = p < 0.0 ? gamma_left_ : gamma_right_;
                const double r = p < 0.0 ? -p : p;
                return g == 2.0 ? r * r : std::pow(r, g);
            }
            case GFamily::LogQuasiconvex:
                return std::log1p(p * p);
            case GFamily::Tabulated:
                return eval_table(p);
        }
        return 0.0;
    }

    /// G'(p); at a tabulated knot the right-hand slope is returned.
    double derivative(double p) const;

    /// Inverse of branch b at level y >= 0: p <= 0 for Left, p >= 0 for Right.
    double branch_inverse(Branch b, double y) const;

    /// Upper bound on sup |G'| over the interval.
    double lipschitz_on(Interval iv) const;

    /// inf |G'| over an interval lying on one side of 0 (0 if it touches 0
    /// where the derivative vanishes).
    double min_abs_slope_on(Interval iv) const;

    /// p -> G(-p); swaps the branches.
    Hamiltonian reflected() const;

    const std::optional<GrowthCertificate>& certificate() const { return certificate_; }
    void set_certificate(GrowthCertificate c) { certificate_ = c; }

private:
    Hamiltonian() = default;
    double eval_table(double p) const;

    GFamily family_ = GFamily::Power;
    double gamma_left_ = 2.0;
    double gamma_right_ = 2.0;
    std::shared_ptr<const BranchTable> left_, right_;
    std::optional<GrowthCertificate> certificate_;
};

inline double eval_G(const Hamiltonian& G, double p) { return G(p); }
inline double branch_inverse(const Hamiltonian& G, Branch b, double y) { return G.branch_inverse(b, y); }
inline double lipschitz_on(const Hamiltonian& G, Interval iv) { return G.lipschitz_on(iv); }

/// Bracket [G2^-1(lambda - beta*vmax), G2^-1(lambda - beta*vmin)] of branch 2
/// (mirrored for branch 1) for a potential whose law takes values in [vmin, vmax].
Interval branch_bracket(const Hamiltonian& G, Branch b, double lambda, double beta, Interval v_range = {0.0, 1.0});

/// Lower modulus m with G_b(p+q) - G_b(p) >= m(q) (in the branch's outward
/// direction) on a bracket. Linear (m = mu q) when the branch slope is bounded
/// away from zero on the bracket, otherwise a family-specific superlinear fallback.
class Modulus {
public:
    enum class Kind { Linear, Power, EndpointIncrement };

    static Modulus linear(double mu);
    static Modulus power(double exponent);
    /// m(q) = min(G(lo+q) - G(lo), G(hi) - G(hi-q)) on a branch-2 bracket; valid
    /// when G' is unimodal there.
    static Modulus endpoint_increment(Hamiltonian g_right, Interval bracket);

    double operator()(double q) const;
    Kind kind() const { return kind_; }
    double mu() const { return mu_; }
    double exponent() const { return exponent_; }
    bool is_fallback() const { return kind_ != Kind::Linear; }
    std::string describe() const;

private:
    Kind kind_ = Kind::Linear;
    double mu_ = 0.0;
    double exponent_ = 1.0;
    std::shared_ptr<const Hamiltonian> g_;
    Interval bracket_{};
};

/// Family superlinear modulus valid on any branch-b bracket, if the family has one.
std::optional<Modulus> fallback_modulus(const Hamiltonian& G, Branch b, Interval bracket);

/// Modulus on a bracket of branch b (bracket given in the branch's own p-range).
Modulus monotonicity_modulus(const Hamiltonian& G, Branch b, Interval bracket);
/// Modulus on [G2^-1(lambda - beta), G2^-1(lambda)].
Modulus monotonicity_modulus(const Hamiltonian& G, double lambda, double beta);

/// sup over y in [levels.lo, levels.hi - eps] of |G_b^-1(y+eps) - G_b^-1(y)|;
/// a modulus of continuity of the branch inverse, evaluated on a dense lattice.
double inverse_modulus(const Hamiltonian& G, Branch b, Interval levels, double eps);

struct GrowthReport {
    bool lower_ok = false;
    bool upper_ok = false;
    bool lipschitz_ok = false;
    double worst_lower = 0.0;      // min of G - (c1|p|^g - 1/c1)
    double worst_upper = 0.0;      // min of c2(|p|^g+1) - G
    double worst_lipschitz = 0.0;  // min of bound - |G(p)-G(q)|
    bool ok() const { return lower_ok && upper_ok && lipschitz_ok; }
};

/// Lattice check of the well-posedness growth conditions over [-P, P].
GrowthReport validate_growth(const Hamiltonian& G, const GrowthCertificate& cert, double P, int lattice = 801);
GrowthReport validate_growth(const Hamiltonian& G, double P, int lattice = 801);

}  // namespace hjlab
