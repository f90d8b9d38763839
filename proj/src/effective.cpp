#include "hjlab/effective.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "hjlab/errors.hpp"
#include "hjlab/numfmt.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

double level_floor(const EnvRealization& env, double beta) { return beta * env.potential_range().hi; }

ThetaEstimate estimate_theta(const EnvRealization& env, const Hamiltonian& G, double beta, double lambda, Branch b,
                             const ThetaSettings& s) {
    double tol = s.cert_tol;
    if (burn_in_length(env, G, beta, lambda, tol, b).x_length > s.max_burn_in) tol = std::max(tol, s.cert_tol_floor);
    return estimate_theta(env, G, beta, lambda, b, s.X, s.n_batches, tol, s.dx);
}

Inversion invert_theta(const EnvRealization& env, const Hamiltonian& G, double beta, double theta, Branch b, double tol,
                       const ThetaSettings& s) {
    require(tol > 0.0, "inversion tolerance must be positive");
    const double sgn = b == Branch::Right ? 1.0 : -1.0;
    const double floor = level_floor(env, beta);
    const double target = sgn * theta;

    Inversion inv;
    inv.branch = b;
    inv.theta = theta;
    auto eval = [&](double lam) {
        ++inv.evaluations;
        return estimate_theta(env, G, beta, lam, b, s);
    };
    auto finish = [&](const ThetaEstimate& est, double lam, double lo, double hi) {
        if (est.ci_halfwidth > tol) {
            std::ostringstream msg;
            msg << "theta estimate ci " << est.ci_halfwidth << " exceeds the requested tol " << tol
                << "; increase X";
            throw PreconditionError(msg.str());
        }
        inv.lambda = lam;
        inv.lambda_lo = lo;
        inv.lambda_hi = hi;
        inv.at = est;
        return inv;
    };

    const ThetaEstimate base = eval(floor);
    const double phi0 = sgn * base.mean;
    if (target < phi0 - base.ci_halfwidth) {
        std::ostringstream msg;
        msg << "theta = " << theta << " lies inside the flat interval (endpoint " << base.mean << " +- "
            << base.ci_halfwidth << "); H is the flat value " << floor << " there";
        throw FlatPieceError(msg.str());
    }
    if (target <= phi0 + tol) return finish(base, floor, floor, floor);

    double lo = floor, step = 1.0, hi = floor + step;
    ThetaEstimate est_hi = eval(hi);
    for (int k = 0; sgn * est_hi.mean < target; ++k) {
        if (k > 60) throw Error("invert_theta: doubling did not reach the target theta");
        lo = hi;
        step *= 2.0;
        hi = floor + step;
        est_hi = eval(hi);
    }
    if (sgn * est_hi.mean - target <= tol) return finish(est_hi, hi, lo, hi);

    ThetaEstimate best = est_hi;
    double best_lam = hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        const ThetaEstimate e = eval(mid);
        const double d = sgn * e.mean - target;
        if (std::abs(d) < std::abs(sgn * best.mean - target)) {
            best = e;
            best_lam = mid;
        }
        if (std::abs(d) <= tol) return finish(e, mid, lo, hi);
        if (d < 0.0) lo = mid;
        else hi = mid;
    }
    return finish(best, best_lam, lo, hi);
}

EffectiveH::Piece EffectiveH::piece(double theta) const {
    if (theta < theta1_beta.mean) return Piece::Left;
    if (theta > theta2_beta.mean) return Piece::Right;
    return Piece::Flat;
}

double EffectiveH::operator()(double theta) const {
    auto interp = [&](const std::vector<BranchEntry>& t, double anchor_theta, bool right) {
        std::vector<std::pair<double, double>> pts;
        pts.emplace_back(anchor_theta, floor);
        for (const auto& e : t) pts.emplace_back(e.theta, e.lambda);
        std::sort(pts.begin(), pts.end());
        if (theta < pts.front().first || theta > pts.back().first) {
            std::ostringstream msg;
            msg << "theta = " << theta << " lies beyond the " << (right ? "right" : "left")
                << " branch table; extend the theta grid";
            throw PreconditionError(msg.str());
        }
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            if (theta <= pts[i + 1].first) {
                const double w = pts[i + 1].first > pts[i].first
                                     ? (theta - pts[i].first) / (pts[i + 1].first - pts[i].first)
                                     : 1.0;
                return pts[i].second + w * (pts[i + 1].second - pts[i].second);
            }
        }
        return pts.back().second;
    };
    switch (piece(theta)) {
        case Piece::Flat: return floor;
        case Piece::Right: return interp(right, theta2_beta.mean, true);
        case Piece::Left: return interp(left, theta1_beta.mean, false);
    }
    return floor;
}

EffectiveH build_effective_H(const EnvRealization& env, const Hamiltonian& G, double beta,
                             const std::vector<double>& theta_grid, double tol, const ThetaSettings& s, int workers) {
    EffectiveH H;
    H.beta = beta;
    H.floor = level_floor(env, beta);
    H.lambda_tol = tol;
    const std::vector<Branch> ends{Branch::Left, Branch::Right};
    auto endpoints = parallel_map(ends, workers, [&](Branch b) { return estimate_theta(env, G, beta, H.floor, b, s); });
    H.theta1_beta = endpoints[0];
    H.theta2_beta = endpoints[1];

    std::vector<double> work;
    for (double t : theta_grid)
        if (H.piece(t) != EffectiveH::Piece::Flat) work.push_back(t);
    auto results = parallel_map(work, workers, [&](double t) {
        const Branch b = t > H.theta2_beta.mean ? Branch::Right : Branch::Left;
        return invert_theta(env, G, beta, t, b, tol, s);
    });
    for (const auto& r : results) {
        BranchEntry e{r.theta, r.lambda, r.lambda_lo, r.lambda_hi};
        (r.branch == Branch::Right ? H.right : H.left).push_back(e);
    }
    auto by_theta = [](const BranchEntry& a, const BranchEntry& b) { return a.theta < b.theta; };
    std::sort(H.left.begin(), H.left.end(), by_theta);
    std::sort(H.right.begin(), H.right.end(), by_theta);
    for (std::size_t i = 1; i < H.right.size(); ++i)
        if (H.right[i].lambda < H.right[i - 1].lambda)
            throw InvariantViolation("right branch table is not increasing in theta");
    for (std::size_t i = 1; i < H.left.size(); ++i)
        if (H.left[i].lambda > H.left[i - 1].lambda)
            throw InvariantViolation("left branch table is not decreasing in theta");
    return H;
}

void write_effective_csv(std::ostream& os, const EffectiveH& H, const std::vector<double>& theta_grid) {
    struct Row {
        double theta, h, lo, hi;
        const char* branch;
    };
    std::vector<Row> rows;
    rows.push_back({H.theta1_beta.mean, H.floor, H.floor, H.floor, "flat"});
    rows.push_back({H.theta2_beta.mean, H.floor, H.floor, H.floor, "flat"});
    for (double t : theta_grid)
        if (H.piece(t) == EffectiveH::Piece::Flat) rows.push_back({t, H.floor, H.floor, H.floor, "flat"});
    for (const auto& e : H.left) rows.push_back({e.theta, e.lambda, e.lambda_lo, e.lambda_hi, "left"});
    for (const auto& e : H.right) rows.push_back({e.theta, e.lambda, e.lambda_lo, e.lambda_hi, "right"});
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.theta < b.theta; });
    os << "theta,H,H_lo,H_hi,branch\n";
    for (const auto& r : rows)
        os << format_double(r.theta) << ',' << format_double(r.h) << ',' << format_double(r.lo) << ','
           << format_double(r.hi) << ',' << r.branch << '\n';
}

}  // namespace hjlab
