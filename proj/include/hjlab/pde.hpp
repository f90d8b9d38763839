#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hjlab/corrector.hpp"
#include "hjlab/gluing.hpp"

namespace hjlab {

enum class Boundary { LinearSlope, GradientExtension };

struct SchemeConfig {
    double dx = 0.05;
    double dt = 0.0;
    double M = 0.0;  // grid is [-M, M]
    double T = 0.0;
    long steps = 0;
    double theta = 0.0;  // ghost slope for Boundary::LinearSlope
    Boundary boundary = Boundary::LinearSlope;
    Interval grad_range{};
    double kappa_grad = 0.0;
    double a_max = 1.0;

    double cfl_number() const { return dt * (2.0 * a_max / (dx * dx) + kappa_grad / dx); }
};

/// dt is the largest value with cfl_number() <= cfl that divides T into whole steps.
/// The gradient range is [min(theta, G1^-1(l)) - 1, max(theta, G2^-1(l)) + 1]
/// with l = beta + G(theta) + beta.
SchemeConfig make_scheme_config(const EnvRealization& env, const Hamiltonian& G, double beta, double theta, double dx,
                                double M, double T, Boundary boundary = Boundary::LinearSlope, double cfl = 0.9);

/// max(G1(min(p-, 0)), G2(max(p+, 0))).
inline double godunov_flux(const Hamiltonian& G, double p_minus, double p_plus) {
    const double l = G(p_minus < 0.0 ? p_minus : 0.0);
    const double r = G(p_plus > 0.0 ? p_plus : 0.0);
    return l > r ? l : r;
}

/// One explicit Euler update of the middle node of a three-point stencil.
inline double scheme_update(const Hamiltonian& G, double um, double u0, double up, double a, double v, double beta,
                            double dx, double dt) {
    const double lap = (up - 2.0 * u0 + um) / (dx * dx);
    return u0 + dt * (a * lap + godunov_flux(G, (u0 - um) / dx, (up - u0) / dx) + beta * v);
}

struct EvolveResult {
    std::vector<double> x;
    std::vector<double> u;
    long steps = 0;
    long excursions = 0;  // steps on which some D-u or D+u left the CFL gradient range
    double max_abs_grad = 0.0;
};

using StepObserver = std::function<void(long step, double t, const std::vector<double>& u)>;

/// Grid x_j = -M + j dx. u0 must have one value per grid node.
EvolveResult evolve(const EnvRealization& env, const Hamiltonian& G, double beta, const std::vector<double>& u0,
                    const SchemeConfig& cfg, const StepObserver& observer = nullptr);

std::vector<double> scheme_grid(const SchemeConfig& cfg);

struct SweepSettings {
    double dx = 0.05;
    double M_scaled = 8.0;  // half-width at unit scale; the run uses M_scaled / epsilon
    double cfl = 0.9;
    int workers = 1;
};

struct SweepResult {
    double theta = 0.0;
    std::vector<double> epsilons;
    std::vector<double> values;  // epsilon u(1/epsilon, 0)
    double reference = 0.0;
    std::vector<double> domain_sensitivity;
    std::vector<long> excursions;
};

SweepResult homogenize_sweep(const EnvRealization& env, const Hamiltonian& G, double beta, double theta,
                             const std::vector<double>& epsilons, const SweepSettings& s, double reference);

void write_sweep_csv(std::ostream& os, const std::vector<SweepResult>& results);

// ---------------------------------------------------------------------------
// Residual probes for phi(t, x) = t drift + F(x) + w psi(x).

enum class ProbeKind { Sub, Super };
std::string to_string(ProbeKind k);
ProbeKind parse_probe_kind(const std::string& s);

/// psi(x) = (2/pi) int_0^x arctan.
double psi(double x);
double psi_prime(double x);
double psi_second(double x);

struct ProbeReport {
    std::string label;
    ProbeKind kind = ProbeKind::Sub;
    double drift = 0.0;
    double min_residual = 0.0;
    double max_residual = 0.0;
    double tol = 0.0;
    bool pass = false;
};

/// Residual a phi_xx + G(phi_x) + beta V - phi_t at interior nodes; F'' and F'
/// by centered differences, psi derivatives analytic. Sub passes when
/// min >= -tol, super when max <= tol.
ProbeReport residual_probe(const EnvRealization& env, const Hamiltonian& G, double beta, const std::vector<double>& x,
                           const std::vector<double>& F, double drift, double psi_weight, ProbeKind kind, double tol);

/// Perturbed corrector: drift lambda -+ (kappa+1) delta, psi weight -+ delta.
ProbeReport probe_corrector(const EnvRealization& env, const Hamiltonian& G, const CorrectorProfile& p, double delta,
                            ProbeKind kind, double tol);

/// Glued profile: drift beta - 3 delta (sub) or beta + 4 delta (super).
ProbeReport probe_glued(const EnvRealization& env, const Hamiltonian& G, const GluedProfile& gp, ProbeKind kind,
                        double tol);

void write_probe_csv(std::ostream& os, const std::vector<ProbeReport>& reports);

}  // namespace hjlab
