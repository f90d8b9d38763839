#include "hjlab/hamiltonian.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <sstream>

#include "hjlab/errors.hpp"
#include "hjlab/numfmt.hpp"

namespace hjlab {

namespace {

// Slope of log(1 + r^2) at r >= 0; increasing on [0,1], decreasing after.
double log_slope(double r) { return 2.0 * r / (1.0 + r * r); }

void validate_table(const BranchTable& t, const char* which) {
    require(t.p.size() == t.g.size() && t.p.size() >= 2, std::string(which) + " table needs at least two rows");
    require(t.p.front() == 0.0 && t.g.front() == 0.0, std::string(which) + " table must start at (0, 0)");
    for (std::size_t i = 1; i < t.p.size(); ++i) {
        require(t.p[i] > t.p[i - 1], std::string(which) + " table |p| must be strictly increasing");
        require(t.g[i] > t.g[i - 1], std::string(which) + " table must be strictly monotone");
    }
}

// Evaluate a branch table at r = |p| >= 0 with linear extrapolation.
double table_value(const BranchTable& t, double r) {
    const auto& p = t.p;
    auto it = std::upper_bound(p.begin(), p.end(), r);
    std::size_t i = it == p.begin() ? 0 : static_cast<std::size_t>(it - p.begin()) - 1;
    i = std::min(i, p.size() - 2);
    const double w = (r - p[i]) / (p[i + 1] - p[i]);
    return t.g[i] + w * (t.g[i + 1] - t.g[i]);
}

double table_inverse(const BranchTable& t, double y) {
    const auto& g = t.g;
    auto it = std::upper_bound(g.begin(), g.end(), y);
    std::size_t i = it == g.begin() ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
    i = std::min(i, g.size() - 2);
    const double w = (y - g[i]) / (g[i + 1] - g[i]);
    return t.p[i] + w * (t.p[i + 1] - t.p[i]);
}

double table_slope_at(const BranchTable& t, double r) {
    const auto& p = t.p;
    auto it = std::upper_bound(p.begin(), p.end(), r);
    std::size_t i = it == p.begin() ? 0 : static_cast<std::size_t>(it - p.begin()) - 1;
    i = std::min(i, p.size() - 2);
    return (t.g[i + 1] - t.g[i]) / (p[i + 1] - p[i]);
}

// Max / min segment slope over |p| in [r0, r1] (extrapolated slope past the end).
std::pair<double, double> table_slope_range(const BranchTable& t, double r0, double r1) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    const std::size_t nseg = t.p.size() - 1;
    for (std::size_t i = 0; i < nseg; ++i) {
        const double a = t.p[i];
        const double b = (i + 1 == nseg) ? std::numeric_limits<double>::infinity() : t.p[i + 1];
        if (b < r0 || a > r1) continue;
        const double s = (t.g[i + 1] - t.g[i]) / (t.p[i + 1] - t.p[i]);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return {lo, hi};
}

}  // namespace

Branch parse_branch(int i) {
    if (i == 1) return Branch::Left;
    if (i == 2) return Branch::Right;
    throw PreconditionError("branch must be 1 or 2");
}

BranchTable read_branch_table(std::istream& is) {
    std::vector<std::pair<double, double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw PreconditionError("tabulated G row needs 'p,G': " + line);
        const std::string first = line.substr(0, comma);
        if (first == "p") continue;  // header
        rows.emplace_back(parse_double(first), parse_double(line.substr(comma + 1)));
    }
    require(!rows.empty(), "empty tabulated G branch");
    std::sort(rows.begin(), rows.end(),
              [](const auto& x, const auto& y) { return std::abs(x.first) < std::abs(y.first); });
    BranchTable t;
    for (auto& [p, g] : rows) {
        t.p.push_back(std::abs(p));
        t.g.push_back(g);
    }
    return t;
}

Hamiltonian Hamiltonian::power(double gamma) {
    require(gamma > 1.0, "power family needs gamma > 1");
    Hamiltonian h;
    h.family_ = GFamily::Power;
    h.gamma_left_ = h.gamma_right_ = gamma;
    return h;
}

Hamiltonian Hamiltonian::asym_power(double gamma_left, double gamma_right) {
    require(gamma_left > 1.0 && gamma_right > 1.0, "asym-power family needs both exponents > 1");
    Hamiltonian h;
    h.family_ = GFamily::AsymPower;
    h.gamma_left_ = gamma_left;
    h.gamma_right_ = gamma_right;
    return h;
}

Hamiltonian Hamiltonian::log_quasiconvex() {
    Hamiltonian h;
    h.family_ = GFamily::LogQuasiconvex;
    return h;
}

Hamiltonian Hamiltonian::tabulated(BranchTable left, BranchTable right) {
    validate_table(left, "left");
    validate_table(right, "right");
    Hamiltonian h;
    h.family_ = GFamily::Tabulated;
    h.left_ = std::make_shared<const BranchTable>(std::move(left));
    h.right_ = std::make_shared<const BranchTable>(std::move(right));
    return h;
}

std::string Hamiltonian::name() const {
    switch (family_) {
        case GFamily::Power: return "power(" + format_double(gamma_right_) + ")";
        case GFamily::AsymPower:
            return "asym-power(" + format_double(gamma_left_) + "," + format_double(gamma_right_) + ")";
        case GFamily::LogQuasiconvex: return "log-quasiconvex";
        case GFamily::Tabulated: return "tabulated";
    }
    return "unknown";
}

double Hamiltonian::eval_table(double p) const {
    return p < 0.0 ? table_value(*left_, -p) : table_value(*right_, p);
}

double Hamiltonian::derivative(double p) const {
    switch (family_) {
        case GFamily::Power:
        case GFamily::AsymPower: {
            if (p == 0.0) return 0.0;
            const double g = p < 0.0 ? gamma_left_ : gamma_right_;
            const double mag = g * std::pow(std::abs(p), g - 1.0);
            return p < 0.0 ? -mag : mag;
        }
        case GFamily::LogQuasiconvex:
            return 2.0 * p / (1.0 + p * p);
        case GFamily::Tabulated:
            return p < 0.0 ? -table_slope_at(*left_, -p) : table_slope_at(*right_, p);
    }
    return 0.0;
}

double Hamiltonian::branch_inverse(Branch b, double y) const {
    require(y >= 0.0, "branch_inverse needs y >= 0");
    if (y == 0.0) return 0.0;
    double r = 0.0;
    switch (family_) {
        case GFamily::Power:
        case GFamily::AsymPower:
            r = std::pow(y, 1.0 / (b == Branch::Left ? gamma_left_ : gamma_right_));
            break;
        case GFamily::LogQuasiconvex:
            r = std::sqrt(std::expm1(y));
            break;
        case GFamily::Tabulated:
            r = table_inverse(b == Branch::Left ? *left_ : *right_, y);
            break;
    }
    return b == Branch::Left ? -r : r;
}

double Hamiltonian::lipschitz_on(Interval iv) const {
    require(iv.lo <= iv.hi, "lipschitz_on needs lo <= hi");
    const double rmax_left = iv.lo < 0.0 ? -iv.lo : 0.0;
    const double rmax_right = iv.hi > 0.0 ? iv.hi : 0.0;
    switch (family_) {
        case GFamily::Power:
        case GFamily::AsymPower: {
            double k = 0.0;
            if (iv.lo < 0.0) k = std::max(k, gamma_left_ * std::pow(rmax_left, gamma_left_ - 1.0));
            if (iv.hi > 0.0) k = std::max(k, gamma_right_ * std::pow(rmax_right, gamma_right_ - 1.0));
            return k;
        }
        case GFamily::LogQuasiconvex: {
            const double rmin = (iv.lo <= 0.0 && iv.hi >= 0.0) ? 0.0 : std::min(std::abs(iv.lo), std::abs(iv.hi));
            const double rmax = std::max(std::abs(iv.lo), std::abs(iv.hi));
            if (rmin <= 1.0 && rmax >= 1.0) return 1.0;
            return std::max(log_slope(rmin), log_slope(rmax));
        }
        case GFamily::Tabulated: {
            double k = 0.0;
            if (iv.lo < 0.0) {
                const double r0 = iv.hi < 0.0 ? -iv.hi : 0.0;
                k = std::max(k, table_slope_range(*left_, r0, rmax_left).second);
            }
            if (iv.hi > 0.0) {
                const double r0 = iv.lo > 0.0 ? iv.lo : 0.0;
                k = std::max(k, table_slope_range(*right_, r0, rmax_right).second);
            }
            return 1.01 * k;
        }
    }
    return 0.0;
}

double Hamiltonian::min_abs_slope_on(Interval iv) const {
    require(iv.lo <= iv.hi, "min_abs_slope_on needs lo <= hi");
    if (iv.lo < 0.0 && iv.hi > 0.0) return 0.0;
    const bool right = iv.lo >= 0.0;
    const double r0 = right ? iv.lo : -iv.hi;
    const double r1 = right ? iv.hi : -iv.lo;
    switch (family_) {
        case GFamily::Power:
        case GFamily::AsymPower: {
            const double g = right ? gamma_right_ : gamma_left_;
            return r0 == 0.0 ? 0.0 : g * std::pow(r0, g - 1.0);
        }
        case GFamily::LogQuasiconvex:
            return std::min(log_slope(r0), log_slope(r1));
        case GFamily::Tabulated:
            return table_slope_range(right ? *right_ : *left_, r0, r1).first;
    }
    return 0.0;
}

Hamiltonian Hamiltonian::reflected() const {
    Hamiltonian h = *this;
    std::swap(h.gamma_left_, h.gamma_right_);
    std::swap(h.left_, h.right_);
    return h;
}

Interval branch_bracket(const Hamiltonian& G, Branch b, double lambda, double beta, Interval v_range) {
    require(beta > 0.0, "beta must be positive");
    const double low_level = lambda - beta * v_range.hi;
    const double high_level = lambda - beta * v_range.lo;
    if (low_level < 0.0) {
        std::ostringstream msg;
        msg << "level lambda = " << lambda << " is below the floor beta*sup V = " << beta * v_range.hi;
        throw PreconditionError(msg.str());
    }
    const double inner = G.branch_inverse(b, low_level);
    const double outer = G.branch_inverse(b, high_level);
    return b == Branch::Right ? Interval{inner, outer} : Interval{outer, inner};
}

// ---------------------------------------------------------------------------
// Modulus

Modulus Modulus::linear(double mu) {
    require(mu > 0.0, "linear modulus needs mu > 0");
    Modulus m;
    m.kind_ = Kind::Linear;
    m.mu_ = mu;
    return m;
}

Modulus Modulus::power(double exponent) {
    require(exponent >= 1.0, "power modulus needs exponent >= 1");
    Modulus m;
    m.kind_ = Kind::Power;
    m.exponent_ = exponent;
    return m;
}

Modulus Modulus::endpoint_increment(Hamiltonian g_right, Interval bracket) {
    Modulus m;
    m.kind_ = Kind::EndpointIncrement;
    m.g_ = std::make_shared<const Hamiltonian>(std::move(g_right));
    m.bracket_ = bracket;
    return m;
}

double Modulus::operator()(double q) const {
    switch (kind_) {
        case Kind::Linear: return mu_ * q;
        case Kind::Power: return std::pow(q, exponent_);
        case Kind::EndpointIncrement: {
            const auto& G = *g_;
            const double lo = bracket_.lo, hi = bracket_.hi;
            return std::min(G(lo + q) - G(lo), G(hi) - G(hi - q));
        }
    }
    return 0.0;
}

std::string Modulus::describe() const {
    switch (kind_) {
        case Kind::Linear: return "linear(mu=" + format_double(mu_) + ")";
        case Kind::Power: return "power(q^" + format_double(exponent_) + ")";
        case Kind::EndpointIncrement: return "endpoint-increment";
    }
    return "unknown";
}

std::optional<Modulus> fallback_modulus(const Hamiltonian& G, Branch b, Interval bracket) {
    if (b == Branch::Left) return fallback_modulus(G.reflected(), Branch::Right, {-bracket.hi, -bracket.lo});
    switch (G.family()) {
        case GFamily::Power:
        case GFamily::AsymPower:
            // (p+q)^g - p^g >= q^g for p >= 0, g >= 1.
            return Modulus::power(G.gamma_right());
        case GFamily::LogQuasiconvex:
            return Modulus::endpoint_increment(G, bracket);
        case GFamily::Tabulated:
            break;
    }
    return std::nullopt;
}

Modulus monotonicity_modulus(const Hamiltonian& G, Branch b, Interval bracket) {
    if (b == Branch::Left) return monotonicity_modulus(G.reflected(), Branch::Right, {-bracket.hi, -bracket.lo});
    require(bracket.lo >= 0.0 && bracket.hi >= bracket.lo, "branch-2 bracket must lie in [0, inf)");
    const double mu = G.min_abs_slope_on(bracket);
    if (mu > 1e-12) return Modulus::linear(mu);
    if (auto m = fallback_modulus(G, b, bracket)) return *m;
    throw PreconditionError("monotonicity modulus degenerates and no fallback applies for " + G.name());
}

Modulus monotonicity_modulus(const Hamiltonian& G, double lambda, double beta) {
    require(lambda >= beta, "monotonicity_modulus needs lambda >= beta");
    return monotonicity_modulus(G, Branch::Right, branch_bracket(G, Branch::Right, lambda, beta));
}

double inverse_modulus(const Hamiltonian& G, Branch b, Interval levels, double eps) {
    require(eps > 0.0 && levels.lo >= 0.0 && levels.hi - levels.lo >= eps, "inverse_modulus needs a level range wider than eps");
    const int n = 4000;
    const double top = levels.hi - eps;
    double best = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double y = levels.lo + (top - levels.lo) * i / n;
        best = std::max(best, std::abs(G.branch_inverse(b, y + eps) - G.branch_inverse(b, y)));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Growth certificate

GrowthReport validate_growth(const Hamiltonian& G, const GrowthCertificate& c, double P, int lattice) {
    require(c.gamma > 1.0 && c.c1 > 0.0 && c.c2 > 0.0, "growth certificate needs gamma > 1, c1 > 0, c2 > 0");
    require(P > 0.0 && lattice >= 3, "validate_growth needs P > 0 and a lattice of >= 3 points");
    std::vector<double> p(static_cast<std::size_t>(lattice)), g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = -P + 2.0 * P * static_cast<double>(i) / (lattice - 1);
        g[i] = G(p[i]);
    }
    const double slack = 1e-12;
    GrowthReport r;
    r.worst_lower = r.worst_upper = r.worst_lipschitz = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pg = std::pow(std::abs(p[i]), c.gamma);
        r.worst_lower = std::min(r.worst_lower, g[i] - (c.c1 * pg - 1.0 / c.c1));
        r.worst_upper = std::min(r.worst_upper, c.c2 * (pg + 1.0) - g[i]);
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            const double bound = c.c2 * std::pow(std::abs(p[i]) + std::abs(p[j]) + 1.0, c.gamma - 1.0) * (p[j] - p[i]);
            r.worst_lipschitz = std::min(r.worst_lipschitz, bound - std::abs(g[j] - g[i]));
        }
    }
    r.lower_ok = r.worst_lower >= -slack;
    r.upper_ok = r.worst_upper >= -slack;
    r.lipschitz_ok = r.worst_lipschitz >= -slack;
    return r;
}

GrowthReport validate_growth(const Hamiltonian& G, double P, int lattice) {
    require(G.certificate().has_value(), "validate_growth needs a growth certificate");
    return validate_growth(G, *G.certificate(), P, lattice);
}

}  // namespace hjlab
