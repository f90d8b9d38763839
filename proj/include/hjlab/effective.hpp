#pragma once

#include <iosfwd>
#include <vector>

#include "hjlab/corrector.hpp"

namespace hjlab {

/// How theta_i(lambda) is estimated during inversion.
struct ThetaSettings {
    double X = 2000.0;
    int n_batches = 20;
    double dx = 0.01;
    double cert_tol = 1e-6;        // certificate tolerance away from the floor level
    double cert_tol_floor = 1e-3;  // used when cert_tol would need more burn-in than max_burn_in
    double max_burn_in = 1000.0;
};

/// Lowest admissible level: beta * sup V over the law (beta for every full-range kind).
double level_floor(const EnvRealization& env, double beta);

/// estimate_theta with the certificate tolerance picked by ThetaSettings.
ThetaEstimate estimate_theta(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, Branch b,
                             const ThetaSettings& s);

struct Inversion {
    Branch branch = Branch::Right;
    double theta = 0.0;
    double lambda = 0.0;
    double lambda_lo = 0.0;  // final bracket of the bisection
    double lambda_hi = 0.0;
    ThetaEstimate at;        // estimate at the returned lambda
    int evaluations = 0;
};

/// lambda with |theta_b(lambda) - theta| <= tol + ci by doubling then bisection
/// on [floor, lambda_hi]. Throws FlatPieceError for theta inside the flat
/// interval and PreconditionError when the estimate's ci exceeds tol.
Inversion invert_theta(const EnvRealization& env, const Hamiltonian& G, double beta, double theta, Branch b, double tol,
                       const ThetaSettings& s = {});

struct BranchEntry {
    double theta = 0.0;
    double lambda = 0.0;
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
};

struct EffectiveH {
    double beta = 0.0;
    double floor = 0.0;  // flat value (beta for full-range environments)
    ThetaEstimate theta1_beta;
    ThetaEstimate theta2_beta;
    std::vector<BranchEntry> left;   // sorted by theta ascending
    std::vector<BranchEntry> right;  // sorted by theta ascending
    double lambda_tol = 0.0;

    enum class Piece { Left, Flat, Right };
    Piece piece(double theta) const;
    /// Flat value inside (theta1, theta2); linear interpolation of the branch
    /// tables (anchored at the flat endpoints) outside. Throws beyond the tables.
    double operator()(double theta) const;
};

EffectiveH build_effective_H(const EnvRealization& env, const Hamiltonian& G, double beta,
                             const std::vector<double>& theta_grid, double tol, const ThetaSettings& s = {},
                             int workers = 1);

/// `theta,H,H_lo,H_hi,branch` rows for the flat endpoints and every table entry.
void write_effective_csv(std::ostream& os, const EffectiveH& H, const std::vector<double>& theta_grid);

}  // namespace hjlab
