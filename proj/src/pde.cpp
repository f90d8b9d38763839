#include "hjlab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hjlab/errors.hpp"
#include "hjlab/numfmt.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

SchemeConfig make_scheme_config(const EnvRealization& env, const Hamiltonian& G, double beta, double theta, double dx,
                                double M, double T, Boundary boundary, double cfl) {
    require(dx > 0.0 && M > 0.0 && T >= 0.0, "scheme needs dx > 0, M > 0, T >= 0");
    require(cfl > 0.0 && cfl <= 0.9, "CFL number must lie in (0, 0.9]");
    SchemeConfig c;
    c.dx = dx;
    const double half = std::round(M / dx);
    require(half >= 1.0, "M must cover at least one cell");
    c.M = half * dx;
    c.T = T;
    c.theta = theta;
    c.boundary = boundary;
    require(env.x_min() <= -c.M + 1e-9 && env.x_max() >= c.M - 1e-9, "environment window does not cover [-M, M]");

    const double lmax = 2.0 * beta + G(theta);
    c.grad_range = {std::min(theta, G.branch_inverse(Branch::Left, lmax)) - 1.0,
                    std::max(theta, G.branch_inverse(Branch::Right, lmax)) + 1.0};
    c.kappa_grad = G.lipschitz_on(c.grad_range);
    double amax = 0.0;
    const long n = static_cast<long>(2.0 * half);
    for (long j = 0; j <= n; ++j) amax = std::max(amax, env.a_at(-c.M + static_cast<double>(j) * dx));
    c.a_max = amax;

    const double rate = 2.0 * amax / (dx * dx) + c.kappa_grad / dx;
    const double dt_max = cfl / rate;
    c.steps = T > 0.0 ? static_cast<long>(std::ceil(T / dt_max)) : 0;
    c.dt = c.steps > 0 ? T / static_cast<double>(c.steps) : dt_max;
    return c;
}

std::vector<double> scheme_grid(const SchemeConfig& cfg) {
    const long n = static_cast<long>(std::llround(2.0 * cfg.M / cfg.dx));
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    for (long j = 0; j <= n; ++j) x[static_cast<std::size_t>(j)] = -cfg.M + static_cast<double>(j) * cfg.dx;
    return x;
}

EvolveResult evolve(const EnvRealization& env, const Hamiltonian& G, double beta, const std::vector<double>& u0,
                    const SchemeConfig& cfg, const StepObserver& observer) {
    if (cfg.cfl_number() > 0.9 + 1e-12) {
        std::ostringstream msg;
        msg << "CFL violated: dt (2 a_max/dx^2 + kappa/dx) = " << cfg.cfl_number() << " > 0.9";
        throw PreconditionError(msg.str());
    }
    EvolveResult r;
    r.x = scheme_grid(cfg);
    const std::size_t n = r.x.size();
    require(u0.size() == n, "initial data must have one value per grid node");

    std::vector<double> diff(n), src(n);
    const double idx2 = 1.0 / (cfg.dx * cfg.dx);
    for (std::size_t j = 0; j < n; ++j) {
        const auto [a, v] = env.sample(r.x[j]);
        diff[j] = a * idx2;
        src[j] = beta * v;
    }

    std::vector<double> u = u0, next(n), ext(n + 2);
    const double dt = cfg.dt, idx = 1.0 / cfg.dx;
    const double glo = cfg.grad_range.lo, ghi = cfg.grad_range.hi;
    for (long s = 0; s < cfg.steps; ++s) {
        std::copy(u.begin(), u.end(), ext.begin() + 1);
        if (cfg.boundary == Boundary::LinearSlope) {
            ext[0] = u[0] - cfg.theta * cfg.dx;
            ext[n + 1] = u[n - 1] + cfg.theta * cfg.dx;
        } else {
            ext[0] = n > 1 ? 2.0 * u[0] - u[1] : u[0];
            ext[n + 1] = n > 1 ? 2.0 * u[n - 1] - u[n - 2] : u[n - 1];
        }
        bool out = false;
        double gmax = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double um = ext[j], u0j = ext[j + 1], up = ext[j + 2];
            const double pm = (u0j - um) * idx, pp = (up - u0j) * idx;
            if (pm < glo || pm > ghi || pp < glo || pp > ghi) out = true;
            gmax = std::max({gmax, std::abs(pm), std::abs(pp)});
            next[j] = u0j + dt * (diff[j] * (up - 2.0 * u0j + um) + godunov_flux(G, pm, pp) + src[j]);
        }
        u.swap(next);
        if (out) ++r.excursions;
        r.max_abs_grad = std::max(r.max_abs_grad, gmax);
        if (!std::isfinite(u[n / 2]) || !std::isfinite(u.front()) || !std::isfinite(u.back())) {
            std::ostringstream msg;
            msg << "non-finite solution at step " << s + 1;
            throw InstabilityError(msg.str());
        }
        if (observer) observer(s + 1, static_cast<double>(s + 1) * dt, u);
    }
    for (double v : u)
        if (!std::isfinite(v)) throw InstabilityError("non-finite solution value at final time");
    r.u = std::move(u);
    r.steps = cfg.steps;
    return r;
}

SweepResult homogenize_sweep(const EnvRealization& env, const Hamiltonian& G, double beta, double theta,
                             const std::vector<double>& epsilons, const SweepSettings& s, double reference) {
    require(!epsilons.empty(), "epsilon list is empty");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        require(epsilons[i] > 0.0, "epsilons must be positive");
        if (i > 0) require(epsilons[i] < epsilons[i - 1], "epsilons must be strictly decreasing");
    }
    struct Job {
        double eps;
        double scale;  // 1 or 2 for the domain-doubling rerun
    };
    std::vector<Job> jobs;
    for (double e : epsilons) {
        jobs.push_back({e, 1.0});
        jobs.push_back({e, 2.0});
    }
    struct Out {
        double value = 0.0;
        long excursions = 0;
    };
    auto outs = parallel_map(jobs, s.workers, [&](const Job& j) {
        const double T = 1.0 / j.eps;
        const SchemeConfig cfg =
            make_scheme_config(env, G, beta, theta, s.dx, j.scale * s.M_scaled / j.eps, T, Boundary::LinearSlope, s.cfl);
        const auto x = scheme_grid(cfg);
        std::vector<double> u0(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) u0[i] = theta * x[i];
        const EvolveResult r = evolve(env, G, beta, u0, cfg);
        return Out{j.eps * r.u[r.u.size() / 2], r.excursions};
    });
    SweepResult res;
    res.theta = theta;
    res.reference = reference;
    res.epsilons = epsilons;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        const Out& base = outs[2 * i];
        const Out& wide = outs[2 * i + 1];
        res.values.push_back(base.value);
        res.domain_sensitivity.push_back(std::abs(wide.value - base.value));
        res.excursions.push_back(base.excursions + wide.excursions);
    }
    return res;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepResult>& results) {
    os << "theta,epsilon,value,reference,domain_sensitivity\n";
    for (const auto& r : results)
        for (std::size_t i = 0; i < r.epsilons.size(); ++i)
            os << format_double(r.theta) << ',' << format_double(r.epsilons[i]) << ',' << format_double(r.values[i])
               << ',' << format_double(r.reference) << ',' << format_double(r.domain_sensitivity[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Probes

std::string to_string(ProbeKind k) { return k == ProbeKind::Sub ? "sub" : "super"; }

ProbeKind parse_probe_kind(const std::string& s) {
    if (s == "sub") return ProbeKind::Sub;
    if (s == "super") return ProbeKind::Super;
    throw PreconditionError("probe kind must be 'sub' or 'super', got '" + s + "'");
}

double psi(double x) { return (2.0 / std::numbers::pi) * (x * std::atan(x) - 0.5 * std::log1p(x * x)); }
double psi_prime(double x) { return (2.0 / std::numbers::pi) * std::atan(x); }
double psi_second(double x) { return (2.0 / std::numbers::pi) / (1.0 + x * x); }

ProbeReport residual_probe(const EnvRealization& env, const Hamiltonian& G, double beta, const std::vector<double>& x,
                           const std::vector<double>& F, double drift, double psi_weight, ProbeKind kind, double tol) {
    require(x.size() == F.size() && x.size() >= 3, "probe needs at least three grid points");
    ProbeReport r;
    r.kind = kind;
    r.drift = drift;
    r.tol = tol;
    r.min_residual = std::numeric_limits<double>::infinity();
    r.max_residual = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 1 < x.size(); ++j) {
        const double h = x[j + 1] - x[j];
        const double F1 = (F[j + 1] - F[j - 1]) / (2.0 * h);
        const double F2 = (F[j + 1] - 2.0 * F[j] + F[j - 1]) / (h * h);
        const auto [a, v] = env.sample(x[j]);
        const double res = a * (F2 + psi_weight * psi_second(x[j])) + G(F1 + psi_weight * psi_prime(x[j])) +
                           beta * v - drift;
        r.min_residual = std::min(r.min_residual, res);
        r.max_residual = std::max(r.max_residual, res);
    }
    r.pass = kind == ProbeKind::Sub ? r.min_residual >= -tol : r.max_residual <= tol;
    return r;
}

ProbeReport probe_corrector(const EnvRealization& env, const Hamiltonian& G, const CorrectorProfile& p, double delta,
                            ProbeKind kind, double tol) {
    require(delta > 0.0 && delta < 1.0, "probe delta must lie in (0, 1)");
    const double kappa = G.lipschitz_on({p.bracket.lo - 1.0, p.bracket.hi + 1.0});
    const double sgn = kind == ProbeKind::Sub ? -1.0 : 1.0;
    ProbeReport r = residual_probe(env, G, p.beta, p.x, p.antiderivative(), p.lambda + sgn * (kappa + 1.0) * delta,
                                   sgn * delta, kind, tol);
    r.label = "corrector-" + std::to_string(static_cast<int>(p.branch));
    return r;
}

ProbeReport probe_glued(const EnvRealization& env, const Hamiltonian& G, const GluedProfile& gp, ProbeKind kind,
                        double tol) {
    const double drift = kind == ProbeKind::Sub ? gp.beta - 3.0 * gp.delta : gp.beta + 4.0 * gp.delta;
    ProbeReport r = residual_probe(env, G, gp.beta, gp.x, gp.antiderivative(), drift, 0.0, kind, tol);
    r.label = "glued-" + to_string(gp.order);
    return r;
}

void write_probe_csv(std::ostream& os, const std::vector<ProbeReport>& reports) {
    os << "kind,min_residual,max_residual,pass\n";
    for (const auto& r : reports)
        os << to_string(r.kind) << ',' << format_double(r.min_residual) << ',' << format_double(r.max_residual) << ','
           << (r.pass ? "true" : "false") << '\n';
}

}  // namespace hjlab
