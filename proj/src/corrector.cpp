#include "hjlab/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hjlab/errors.hpp"
#include "hjlab/numfmt.hpp"

namespace hjlab {

namespace {

constexpr double kBracketGuard = 1e-9;
constexpr double kStability = 0.5;  // target h * Lip(G) / a per RK4 substep

}  // namespace

// ---------------------------------------------------------------------------
// Phi

double phi_linear(double mu, double p, double K) {
    require(mu > 0.0 && p > 0.0, "phi_linear needs mu > 0 and p > 0");
    return p >= K ? 0.0 : std::log(K / p) / mu;
}

double phi_quadrature(const Modulus& m, double p, double K) {
    require(p > 0.0, "phi_quadrature needs p > 0");
    if (p >= K) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    auto inv = [&m](double q) { return 1.0 / m(q); };
    double total = 0.0;
    double a = p;
    while (a < K) {
        const double b = std::min(2.0 * a, K);
        total += gauss_kronrod<double, 61>::integrate(inv, a, b, 8, 1e-12);
        a = b;
    }
    return total;
}

double phi_inverse(const Modulus& m, double z, double K) {
    if (K <= 0.0) return 0.0;
    if (z <= 0.0) return K;
    if (m.kind() == Modulus::Kind::Linear) return K * std::exp(-m.mu() * z);
    // Phi is decreasing in p: accumulate it over dyadic segments [top/2, top]
    // from K downward, then bisect inside the segment where it reaches z.
    using boost::math::quadrature::gauss_kronrod;
    auto inv = [&m](double q) { return 1.0 / m(q); };
    double top = K, acc = 0.0;
    for (int guard = 0;; ++guard) {
        if (guard > 2000) throw Error("phi_inverse: no lower bracket found");
        const double bot = 0.5 * top;
        const double piece = gauss_kronrod<double, 61>::integrate(inv, bot, top, 8, 1e-12);
        if (acc + piece >= z) break;
        acc += piece;
        top = bot;
    }
    double lo = std::log(0.5 * top), hi = std::log(top);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (acc + gauss_kronrod<double, 61>::integrate(inv, std::exp(mid), top, 8, 1e-12) >= z) lo = mid;
        else hi = mid;
    }
    return std::exp(hi);
}

BurnIn burn_in_length(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, double tol,
                      Branch b) {
    require(tol > 0.0, "burn-in tolerance must be positive");
    BurnIn out;
    out.bracket = branch_bracket(G, b, lambda, beta, env.potential_range());
    out.K = out.bracket.width();
    out.modulus = monotonicity_modulus(G, b, out.bracket);
    if (tol >= out.K) return out;
    out.s_length = out.modulus.kind() == Modulus::Kind::Linear ? phi_linear(out.modulus.mu(), tol, out.K)
                                                               : phi_quadrature(out.modulus, tol, out.K);
    // Near the floor level the linear rate degenerates; any valid modulus
    // certifies, so keep whichever gives the shorter burn-in.
    if (out.modulus.kind() == Modulus::Kind::Linear) {
        if (auto fb = fallback_modulus(G, b, out.bracket)) {
            const double z = phi_quadrature(*fb, tol, out.K);
            if (z < out.s_length) {
                out.s_length = z;
                out.modulus = *fb;
            }
        }
    }
    out.x_length = out.s_length;
    return out;
}

// ---------------------------------------------------------------------------
// Shooting

namespace {

double local_a_min(const EnvRealization& env, double x0, double x1) {
    if (x0 > x1) std::swap(x0, x1);
    double m = std::min(env.a_at(x0), env.a_at(x1));
    const double h = env.dx();
    const auto& a = env.a_vals();
    const double i0 = std::ceil((x0 - env.x_min()) / h);
    const double i1 = std::floor((x1 - env.x_min()) / h);
    for (double i = std::max(i0, 0.0); i <= i1 && i < static_cast<double>(a.size()); i += 1.0)
        m = std::min(m, a[static_cast<std::size_t>(i)]);
    return m;
}

// Integrates over grid indices k_from -> k_to with x_k = anchor + k dx.
// Branch 2 needs k_from <= k_to, branch 1 k_from >= k_to. Values are returned
// in ascending x order. Branch 1 is solved in the reflected frame y = -x,
// g(y) = -f(-y), which turns it into a rightward branch-2 problem for G(-p).
std::vector<double> integrate(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, Branch b,
                              double anchor, double dx, long k_from, long k_to, double c, Interval bracket,
                              double& max_excess) {
    const double sgn = b == Branch::Right ? 1.0 : -1.0;
    const Hamiltonian Gs = b == Branch::Right ? G : G.reflected();
    const double kappa = G.lipschitz_on(bracket);
    auto rhs = [&](double y, double u) {
        const auto [a, v] = env.sample(sgn * y);
        return (lambda - Gs(u) - beta * v) / a;
    };
    auto check = [&](double f, double x) {
        if (!std::isfinite(f)) {
            std::ostringstream msg;
            msg << "non-finite corrector value at x = " << x;
            throw BracketExit(msg.str());
        }
        const double e = std::max({bracket.lo - f, f - bracket.hi, 0.0});
        max_excess = std::max(max_excess, e);
        if (e > kBracketGuard) {
            std::ostringstream msg;
            msg << "corrector left the bracket [" << bracket.lo << ", " << bracket.hi << "] by " << e << " at x = "
                << x;
            throw BracketExit(msg.str());
        }
    };

    const long n = std::labs(k_to - k_from);
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    const long step = b == Branch::Right ? 1 : -1;
    auto store = [&](long k, double f) {
        const long idx = b == Branch::Right ? k - k_from : k - k_to;
        out[static_cast<std::size_t>(idx)] = f;
    };

    double u = sgn * c;
    check(c, anchor + static_cast<double>(k_from) * dx);
    store(k_from, c);
    for (long k = k_from; k != k_to; k += step) {
        const double x0 = anchor + static_cast<double>(k) * dx;
        const double x1 = anchor + static_cast<double>(k + step) * dx;
        const double y0 = sgn * x0;
        const double a_loc = kappa > 0.0 ? local_a_min(env, x0, x1) : 1.0;
        const int nsub = std::max(1, static_cast<int>(std::ceil(dx * kappa / (kStability * a_loc))));
        const double h = dx / nsub;
        for (int i = 0; i < nsub; ++i) {
            const double y = y0 + i * h;
            const double k1 = rhs(y, u);
            const double k2 = rhs(y + 0.5 * h, u + 0.5 * h * k1);
            const double k3 = rhs(y + 0.5 * h, u + 0.5 * h * k2);
            const double k4 = rhs(y + h, u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        const double f = sgn * u;
        check(f, x1);
        store(k + step, f);
    }
    return out;
}

void require_in_bracket(double c, Interval br) {
    if (c < br.lo - 1e-12 || c > br.hi + 1e-12) {
        std::ostringstream msg;
        msg << "initial value " << c << " outside the bracket [" << br.lo << ", " << br.hi << "]";
        throw PreconditionError(msg.str());
    }
}

}  // namespace

ShootResult shoot(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, Branch b, double L,
                  double c, double dx, std::optional<double> x_end) {
    require(dx > 0.0, "shoot needs dx > 0");
    ShootResult r;
    r.bracket = branch_bracket(G, b, lambda, beta, env.potential_range());
    require_in_bracket(c, r.bracket);
    const double end = x_end.value_or(b == Branch::Right ? env.x_max() : env.x_min());
    require(b == Branch::Right ? end >= L : end <= L, "shoot: x_end lies on the wrong side of L");
    const long n = static_cast<long>(std::floor(std::abs(end - L) / dx + 1e-9));
    const long k_to = b == Branch::Right ? n : -n;
    r.f = integrate(env, G, beta, lambda, b, L, dx, 0, k_to, c, r.bracket, r.max_excess);
    r.x.resize(r.f.size());
    const long k_first = b == Branch::Right ? 0 : -n;
    for (std::size_t i = 0; i < r.x.size(); ++i) r.x[i] = L + static_cast<double>(k_first + static_cast<long>(i)) * dx;
    return r;
}

// ---------------------------------------------------------------------------
// Profiles

std::vector<double> CorrectorProfile::antiderivative() const {
    std::vector<double> F(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) F[i] = F[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
    if (!x.empty() && x.front() <= 0.0 && 0.0 <= x.back()) {
        auto it = std::lower_bound(x.begin(), x.end(), 0.0);
        std::size_t j = static_cast<std::size_t>(it - x.begin());
        double F0 = F[j];
        if (x[j] != 0.0 && j > 0) {
            const double h = 0.0 - x[j - 1];
            const double f0 = f[j - 1] + (f[j] - f[j - 1]) * h / (x[j] - x[j - 1]);
            F0 = F[j - 1] + 0.5 * h * (f[j - 1] + f0);
        }
        for (double& v : F) v -= F0;
    }
    return F;
}

double CorrectorProfile::f_at(double xq) const {
    require(!x.empty() && xq >= x.front() - 1e-12 && xq <= x.back() + 1e-12, "f_at: point outside the profile");
    auto it = std::upper_bound(x.begin(), x.end(), xq);
    std::size_t j = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    j = std::min(j, x.size() - 2);
    const double w = (xq - x[j]) / (x[j + 1] - x[j]);
    return f[j] + w * (f[j + 1] - f[j]);
}

CorrectorProfile corrector_profile(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda,
                                   Branch b, Interval region, double tol, double dx) {
    require(dx > 0.0, "corrector_profile needs dx > 0");
    require(region.hi > region.lo, "corrector region is degenerate");
    const BurnIn bi = burn_in_length(env, G, beta, lambda, tol, b);
    const long n = static_cast<long>(std::ceil(region.width() / dx - 1e-9));
    // One step past z* so the certificate holds with margin after rounding.
    const long n_burn = bi.K > 0.0 ? static_cast<long>(std::floor(bi.x_length / dx)) + 1 : 0;
    const double r0 = region.lo;
    const double r_end = r0 + static_cast<double>(n) * dx;
    const double L = b == Branch::Right ? r0 - static_cast<double>(n_burn) * dx
                                        : r0 + static_cast<double>(n + n_burn) * dx;
    const double need_lo = std::min(L, r0), need_hi = std::max(L, r_end);
    if (need_lo < env.x_min() - 1e-9 * dx || need_hi > env.x_max() + 1e-9 * dx) {
        std::ostringstream msg;
        msg << "window too small: region plus burn-in needs [" << need_lo << ", " << need_hi << "], window is ["
            << env.x_min() << ", " << env.x_max() << "]";
        throw PreconditionError(msg.str());
    }

    const long k_from = b == Branch::Right ? -n_burn : n + n_burn;
    const long k_to = b == Branch::Right ? n : 0;
    const std::size_t off = b == Branch::Right ? static_cast<std::size_t>(n_burn) : 0;
    auto run = [&](double c) {
        double excess = 0.0;
        auto all = integrate(env, G, beta, lambda, b, r0, dx, k_from, k_to, c, bi.bracket, excess);
        return std::vector<double>(all.begin() + static_cast<long>(off), all.begin() + static_cast<long>(off) + n + 1);
    };

    CorrectorProfile p;
    p.branch = b;
    p.lambda = lambda;
    p.beta = beta;
    p.dx = dx;
    p.bracket = bi.bracket;
    p.modulus = bi.modulus.describe();
    p.burn_in = static_cast<double>(n_burn) * dx;
    p.f = run(0.5 * (bi.bracket.lo + bi.bracket.hi));
    p.x.resize(p.f.size());
    for (std::size_t j = 0; j < p.x.size(); ++j) p.x[j] = r0 + static_cast<double>(j) * dx;
    p.burn_in_s = b == Branch::Right ? s_between(env, L, r0) : s_between(env, r_end, L);
    p.cert_bound = phi_inverse(bi.modulus, p.burn_in_s, bi.K);
    if (p.cert_bound > tol) {
        std::ostringstream msg;
        msg << "certified bound " << p.cert_bound << " exceeds tol " << tol;
        throw CertificateViolation(msg.str());
    }

    if (bi.K > 0.0) {
        const auto lo = run(bi.bracket.lo);
        const auto hi = run(bi.bracket.hi);
        for (std::size_t j = 0; j < lo.size(); ++j) p.merge_gap = std::max(p.merge_gap, std::abs(hi[j] - lo[j]));
        if (p.merge_gap > 2.0 * p.cert_bound + 1e-14) {
            std::ostringstream msg;
            msg << "endpoint shots differ by " << p.merge_gap << " on the region, above 2 x certified bound "
                << p.cert_bound;
            throw CertificateViolation(msg.str());
        }
    }
    return p;
}

double max_residual(const EnvRealization& env, const Hamiltonian& G, const CorrectorProfile& p) {
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < p.f.size(); ++j) {
        const auto [a, v] = env.sample(p.x[j]);
        const double fp = (p.f[j + 1] - p.f[j - 1]) / (p.x[j + 1] - p.x[j - 1]);
        worst = std::max(worst, std::abs(a * fp + G(p.f[j]) + p.beta * v - p.lambda));
    }
    return worst;
}

void write_profile(std::ostream& os, const CorrectorProfile& p) {
    os << "# lambda " << format_double(p.lambda) << '\n'
       << "# branch " << static_cast<int>(p.branch) << '\n'
       << "# beta " << format_double(p.beta) << '\n'
       << "# burn_in " << format_double(p.burn_in) << '\n'
       << "# cert_bound " << format_double(p.cert_bound) << '\n'
       << "# merge_gap " << format_double(p.merge_gap) << '\n'
       << "# modulus " << p.modulus << '\n'
       << "x,f\n";
    for (std::size_t j = 0; j < p.x.size(); ++j) os << format_double(p.x[j]) << ',' << format_double(p.f[j]) << '\n';
}

// ---------------------------------------------------------------------------
// Theta

double batch_ci_halfwidth(const std::vector<double>& m) {
    const std::size_t nb = m.size();
    require(nb >= 2, "batch means need at least two batches");
    double mean = 0.0;
    for (double v : m) mean += v;
    mean /= static_cast<double>(nb);
    double ss = 0.0;
    for (double v : m) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(nb - 1));
    boost::math::students_t dist(static_cast<double>(nb - 1));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    return t * sd / std::sqrt(static_cast<double>(nb));
}

ThetaEstimate estimate_theta(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, Branch b,
                             double X, int n_batches, double tol, double dx) {
    require(n_batches >= 10, "estimate_theta needs n_batches >= 10");
    require(X > 0.0, "estimate_theta needs X > 0");
    const CorrectorProfile p = corrector_profile(env, G, beta, lambda, b, {0.0, X}, tol, dx);
    const std::size_t n = p.f.size() - 1;
    require(n >= static_cast<std::size_t>(n_batches), "estimate_theta: fewer grid cells than batches");

    // Cell-average mean over [i0, i1] with Neumaier summation.
    auto cell_mean = [&](std::size_t i0, std::size_t i1) {
        double s = 0.0, comp = 0.0;
        for (std::size_t i = i0; i < i1; ++i) {
            const double v = 0.5 * (p.f[i] + p.f[i + 1]);
            const double t = s + v;
            comp += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
            s = t;
        }
        return (s + comp) / static_cast<double>(i1 - i0);
    };
    ThetaEstimate t;
    t.branch = b;
    t.lambda = lambda;
    t.window_length = static_cast<double>(n) * dx;
    t.n_batches = n_batches;
    t.cert_bound = p.cert_bound;
    t.burn_in = p.burn_in;
    t.mean = cell_mean(0, n);
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(n_batches));
    for (int i = 0; i < n_batches; ++i) {
        const std::size_t i0 = n * static_cast<std::size_t>(i) / static_cast<std::size_t>(n_batches);
        const std::size_t i1 = n * static_cast<std::size_t>(i + 1) / static_cast<std::size_t>(n_batches);
        means.push_back(cell_mean(i0, i1));
    }
    t.ci_halfwidth = batch_ci_halfwidth(means);
    return t;
}

}  // namespace hjlab
