#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hjlab/environment.hpp"
#include "hjlab/hamiltonian.hpp"

namespace hjlab {

// ---------------------------------------------------------------------------
// Contraction certificate: Phi(p) = int_p^K dq / m(q) and its inverse.

/// Closed form for the linear modulus m(q) = mu q: ln(K/p)/mu.
double phi_linear(double mu, double p, double K);
/// Gauss-Kronrod quadrature of 1/m over geometric panels [p, 2p, 4p, ..., K].
double phi_quadrature(const Modulus& m, double p, double K);
/// Phi^-1(z): K e^{-mu z} for a linear modulus, log-space bisection on the
/// quadrature otherwise (returns the upper end of the final bracket).
double phi_inverse(const Modulus& m, double z, double K);

struct BurnIn {
    double s_length = 0.0;  // z* with Phi^-1(z*) <= tol
    double x_length = 0.0;  // worst case a = 1: equal to s_length
    double K = 0.0;         // bracket width
    Interval bracket{};
    Modulus modulus = Modulus::linear(1.0);
};

BurnIn burn_in_length(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, double tol,
                      Branch b = Branch::Right);

// ---------------------------------------------------------------------------
// Shooting

struct ShootResult {
    std::vector<double> x;  // ascending
    std::vector<double> f;
    Interval bracket{};
    double max_excess = 0.0;  // largest distance of any f outside the bracket
};

/// RK4 for a f' + G(f) + beta V = lambda with f(L) = c. Branch 2 integrates
/// rightward to x_end (default: window right end), branch 1 leftward (default:
/// window left end) through the reflected problem. Each dx step is split into
/// equal substeps when dx * Lip(G) / a exceeds 0.5 locally.
ShootResult shoot(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, Branch b, double L,
                  double c, double dx, std::optional<double> x_end = std::nullopt);

// ---------------------------------------------------------------------------
// Certified profiles

struct CorrectorProfile {
    Branch branch = Branch::Right;
    double lambda = 0.0;
    double beta = 0.0;
    double dx = 0.0;
    std::vector<double> x;
    std::vector<double> f;
    double burn_in = 0.0;    // x-length discarded upstream of the region
    double burn_in_s = 0.0;  // s-length of the discarded part
    double cert_bound = 0.0;
    double merge_gap = 0.0;  // sup |f(.|c=lo) - f(.|c=hi)| on the region
    Interval bracket{};
    std::string modulus;

    /// F(x) = int_{x_0}^x f, trapezoid, with F(0) = 0 when 0 lies on the grid.
    std::vector<double> antiderivative() const;
    /// Linear interpolation of f.
    double f_at(double x) const;
};

/// Region [r0, r1] is covered by grid points r0 + j dx.
CorrectorProfile corrector_profile(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda,
                                   Branch b, Interval region, double tol, double dx);

/// max |a f' + G(f) + beta V - lambda| over interior points, f' by centered difference.
double max_residual(const EnvRealization& env, const Hamiltonian& G, const CorrectorProfile& p);

void write_profile(std::ostream& os, const CorrectorProfile& p);

// ---------------------------------------------------------------------------
// Ergodic averages

struct ThetaEstimate {
    Branch branch = Branch::Right;
    double lambda = 0.0;
    double mean = 0.0;
    double ci_halfwidth = 0.0;  // 95% batch means
    double window_length = 0.0;
    int n_batches = 0;
    double cert_bound = 0.0;
    double burn_in = 0.0;
};

/// Mean of f over [0, X]; batches are equal index blocks.
ThetaEstimate estimate_theta(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, Branch b,
                             double X, int n_batches, double tol, double dx);

/// 95% Student-t batch-means half-width for the given batch means.
double batch_ci_halfwidth(const std::vector<double>& batch_means);

}  // namespace hjlab
