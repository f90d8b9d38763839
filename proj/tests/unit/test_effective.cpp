#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "hjlab/effective.hpp"
#include "hjlab/errors.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

const Hamiltonian P2 = Hamiltonian::power(2.0);

EnvRealization constant_env(double v0) {
    EnvParams p;
    p.v0 = v0;
    return generate_env(EnvKind::Constant, 1, {-100.0, 2100.0}, 0.01, p);
}

ThetaSettings quick(double X, int batches) {
    ThetaSettings s;
    s.X = X;
    s.n_batches = batches;
    return s;
}

}  // namespace

TEST_CASE("level floor is beta times the top of the potential") {
    CHECK(level_floor(constant_env(0.0), 1.0) == 0.0);
    CHECK(level_floor(constant_env(1.0), 2.0) == 2.0);
    CHECK(level_floor(generate_env(EnvKind::IidInterp, 1, {0.0, 1.0}, 0.01), 1.5) == 1.5);
}

TEST_CASE("inversion on constant media has closed forms") {
    // v0 = 0: lambda = G(theta). v0 = 1: lambda = G(theta) + beta.
    const auto e0 = constant_env(0.0);
    const Inversion a = invert_theta(e0, P2, 1.0, 2.0, Branch::Right, 1e-6, quick(100.0, 10));
    CHECK(a.lambda == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(a.at.mean == doctest::Approx(2.0).epsilon(1e-12));
    const Inversion al = invert_theta(e0, P2, 1.0, -1.5, Branch::Left, 1e-6, quick(100.0, 10));
    CHECK(al.lambda == doctest::Approx(2.25).epsilon(1e-6));

    const auto e1 = constant_env(1.0);
    const Inversion b = invert_theta(e1, P2, 1.0, 2.0, Branch::Right, 1e-6, quick(100.0, 10));
    CHECK(b.lambda == doctest::Approx(5.0).epsilon(1e-12));
    const Inversion c = invert_theta(e1, P2, 1.0, 0.7, Branch::Right, 1e-6, quick(100.0, 10));
    CHECK(c.lambda == doctest::Approx(1.49).epsilon(1e-6));
    CHECK(c.lambda_lo <= c.lambda);
    CHECK(c.lambda <= c.lambda_hi);
}

TEST_CASE("periodic inversion agrees with the one-period oracle") {
    const auto env = generate_env(EnvKind::Periodic, 3, {-1100.0, 120.0}, 0.001);
    const auto G = [](double p) { return p * p; };
    const double tol = 1e-3;
    const Inversion inv = invert_theta(env, P2, 1.0, 1.5, Branch::Right, tol, quick(100.0, 20));
    const double hi = std::sqrt(inv.lambda);
    const double lo = std::sqrt(inv.lambda - 1.0);
    const double theta_ref = oracle::periodic_theta(env, G, 1.0, inv.lambda, 0.0, lo, hi, 1000);
    CHECK(std::abs(theta_ref - 1.5) <= tol + inv.at.ci_halfwidth + 1e-6);
}

TEST_CASE("theta inside the flat interval has no inverse") {
    const auto env = generate_env(EnvKind::IidInterp, 42, {-1500.0, 1500.0}, 0.01);
    CHECK_THROWS_AS(invert_theta(env, P2, 1.0, 0.0, Branch::Right, 0.05, quick(400.0, 10)), FlatPieceError);
    CHECK_THROWS_AS(invert_theta(env, P2, 1.0, 1.0, Branch::Right, 0.0, quick(400.0, 10)), PreconditionError);
}

TEST_CASE("effective Hamiltonian is flat between the endpoints and monotone outside") {
    const auto env = generate_env(EnvKind::IidInterp, 42, {-1500.0, 1500.0}, 0.01);
    const std::vector<double> grid{-1.6, -1.0, -0.2, 0.0, 0.2, 1.0, 1.6};
    const EffectiveH H = build_effective_H(env, P2, 1.0, grid, 0.05, quick(400.0, 10));

    CHECK(H.floor == 1.0);
    CHECK(H.theta1_beta.mean < 0.0);
    CHECK(H.theta2_beta.mean > 0.0);
    CHECK(H.theta2_beta.mean < 1.0);
    CHECK(H.piece(0.0) == EffectiveH::Piece::Flat);
    CHECK(H.piece(1.6) == EffectiveH::Piece::Right);
    CHECK(H.piece(-1.6) == EffectiveH::Piece::Left);
    CHECK(H(0.0) == 1.0);
    CHECK(H(H.theta2_beta.mean) == 1.0);
    CHECK(H.right.size() == 2);
    CHECK(H.left.size() == 2);

    double prev = H.floor;
    for (double t = H.theta2_beta.mean; t <= 1.6; t += 0.05) {
        const double h = H(t);
        CHECK(h >= prev);
        prev = h;
    }
    prev = H.floor;
    for (double t = H.theta1_beta.mean; t >= -1.6; t -= 0.05) {
        const double h = H(t);
        CHECK(h >= prev);
        prev = h;
    }
    // Bounds from the constant media on either side: G(theta) <= H <= G(theta) + beta.
    for (const auto& e : H.right) {
        CHECK(e.lambda >= P2(e.theta) - 0.1);
        CHECK(e.lambda <= P2(e.theta) + 1.0 + 0.1);
    }
    CHECK_THROWS_AS(H(2.5), PreconditionError);

    std::ostringstream os;
    write_effective_csv(os, H, grid);
    const std::string s = os.str();
    CHECK(s.rfind("theta,H,H_lo,H_hi,branch\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 2 + 3 + 4);
}
