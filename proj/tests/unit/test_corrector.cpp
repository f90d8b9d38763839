#include <cmath>
#include <sstream>

#include "doctest.h"
#include "hjlab/corrector.hpp"
#include "hjlab/errors.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

EnvRealization constant_env(double v0, Interval w = {-50.0, 50.0}) {
    EnvParams p;
    p.v0 = v0;
    return generate_env(EnvKind::Constant, 1, w, 0.01, p);
}

const Hamiltonian P2 = Hamiltonian::power(2.0);

}  // namespace

TEST_CASE("shooting keeps constant stationary solutions") {
    const auto env1 = constant_env(1.0);
    const ShootResult r = shoot(env1, P2, 1.0, 2.0, Branch::Right, -10.0, 1.0, 0.01);
    for (double f : r.f) REQUIRE(f == 1.0);
    CHECK(r.max_excess == 0.0);

    const auto env0 = constant_env(0.0);
    const ShootResult s = shoot(env0, P2, 1.0, 2.0, Branch::Right, -10.0, std::sqrt(2.0), 0.01);
    for (double f : s.f) REQUIRE(f == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("shooting rejects invalid inputs") {
    const auto env = generate_env(EnvKind::Periodic, 3, {-30.0, 30.0}, 0.01);
    CHECK_THROWS_AS(shoot(env, P2, 1.0, 2.0, Branch::Right, -20.0, 1.5, 0.01), PreconditionError);
    CHECK_THROWS_AS(shoot(env, P2, 1.0, 0.5, Branch::Right, -20.0, 0.5, 0.01), PreconditionError);
    CHECK_THROWS_AS(shoot(env, P2, 1.0, 2.0, Branch::Right, 40.0, 1.2, 0.01), PreconditionError);
}

TEST_CASE("shooting matches a dense-step RK4 oracle on a periodic medium") {
    const auto env = generate_env(EnvKind::Periodic, 3, {-30.0, 30.0}, 0.001);
    // Steps aligned with the environment nodes keep every RK4 stage on one linear piece.
    const ShootResult r = shoot(env, P2, 1.0, 2.0, Branch::Right, -20.0, 1.2, 0.001, 10.0);
    const auto dense = oracle::rk4_right(env, [](double p) { return p * p; }, 1.0, 2.0, -20.0, 1.2, 1e-4, 300000);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        if (r.x[i] < 0.0) continue;
        const auto k = static_cast<std::size_t>(std::llround((r.x[i] + 20.0) / 1e-4));
        worst = std::max(worst, std::abs(r.f[i] - dense[k]));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("branch 1 shooting runs leftward and stays in the mirrored bracket") {
    const auto env = generate_env(EnvKind::IidInterp, 8, {-60.0, 60.0}, 0.01);
    const ShootResult r = shoot(env, P2, 1.0, 2.0, Branch::Left, 40.0, -1.2, 0.01, -40.0);
    CHECK(r.x.front() == doctest::Approx(-40.0));
    CHECK(r.x.back() == doctest::Approx(40.0));
    CHECK(r.f.back() == -1.2);
    for (double f : r.f) {
        REQUIRE(f >= -std::sqrt(2.0) - 1e-9);
        REQUIRE(f <= -1.0 + 1e-9);
    }
}

TEST_CASE("burn-in closed form and quadrature") {
    const auto env = generate_env(EnvKind::IidInterp, 1, {-10.0, 10.0}, 0.01);
    const BurnIn b = burn_in_length(env, P2, 1.0, 2.0, 1e-6);
    CHECK(b.K == doctest::Approx(std::sqrt(2.0) - 1.0));
    CHECK(b.modulus.kind() == Modulus::Kind::Linear);
    CHECK(b.s_length == doctest::Approx(std::log((std::sqrt(2.0) - 1.0) / 1e-6) / 2.0).epsilon(1e-12));
    CHECK(b.s_length == doctest::Approx(6.467068485).epsilon(1e-9));
    CHECK(b.x_length == b.s_length);
    CHECK(burn_in_length(env, P2, 1.0, 2.0, 0.5).s_length == 0.0);

    const Modulus lin = Modulus::linear(2.0);
    for (double p : {1e-6, 1e-3, 0.1})
        CHECK(phi_quadrature(lin, p, 0.414) == doctest::Approx(phi_linear(2.0, p, 0.414)).epsilon(1e-10));

    // q^2 modulus: Phi(p) = 1/p - 1/K, so z* = 1/tol - 1/K at lambda = beta.
    const BurnIn f = burn_in_length(env, P2, 1.0, 1.0, 1e-3);
    CHECK(f.modulus.kind() == Modulus::Kind::Power);
    CHECK(f.s_length == doctest::Approx(1.0 / 1e-3 - 1.0).epsilon(1e-10));
    CHECK(phi_inverse(f.modulus, f.s_length, f.K) == doctest::Approx(1e-3).epsilon(1e-9));
    CHECK(phi_inverse(lin, 0.0, 0.414) == 0.414);
}

TEST_CASE("corrector profile on a constant medium") {
    const auto env = constant_env(1.0);
    const CorrectorProfile p = corrector_profile(env, P2, 1.0, 2.0, Branch::Right, {0.0, 10.0}, 1e-6, 0.01);
    for (double f : p.f) CHECK(f == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.cert_bound <= 1e-6);
    CHECK(p.x.front() == doctest::Approx(0.0));
    CHECK(p.x.back() == doctest::Approx(10.0));
}

TEST_CASE("periodic corrector is periodic and starts merge") {
    const auto env = generate_env(EnvKind::Periodic, 3, {-40.0, 40.0}, 0.001);
    const double tol = 1e-6;
    const CorrectorProfile p = corrector_profile(env, P2, 1.0, 2.0, Branch::Right, {0.0, 10.0}, tol, 0.01);
    CHECK(p.cert_bound <= tol);
    CHECK(p.merge_gap <= 2.0 * tol);
    double dev = 0.0;
    for (std::size_t i = 0; i + 100 < p.f.size(); ++i) dev = std::max(dev, std::abs(p.f[i + 100] - p.f[i]));
    CHECK(dev <= 2.0 * tol);

    // Independent shots from both bracket ends over the same burn-in.
    const double L = -p.burn_in;
    const auto lo = shoot(env, P2, 1.0, 2.0, Branch::Right, L, p.bracket.lo, 0.01, 10.0);
    const auto hi = shoot(env, P2, 1.0, 2.0, Branch::Right, L, p.bracket.hi, 0.01, 10.0);
    double gap = 0.0;
    for (std::size_t i = 0; i < lo.x.size(); ++i)
        if (lo.x[i] >= -1e-9) gap = std::max(gap, hi.f[i] - lo.f[i]);
    CHECK(gap <= 2.0 * tol);
}

TEST_CASE("contraction ordering and the Phi envelope") {
    const auto env = generate_env(EnvKind::GaussSquash, 12, {-50.0, 50.0}, 0.01);
    const Interval br = branch_bracket(P2, Branch::Right, 2.5, 1.0);
    const double c = br.lo + 0.1 * br.width(), d = br.hi - 0.05 * br.width();
    const auto fc = shoot(env, P2, 1.0, 2.5, Branch::Right, -40.0, c, 0.01, 40.0);
    const auto fd = shoot(env, P2, 1.0, 2.5, Branch::Right, -40.0, d, 0.01, 40.0);
    const Modulus m = monotonicity_modulus(P2, Branch::Right, br);
    for (std::size_t i = 0; i < fc.x.size(); ++i) {
        REQUIRE(fc.f[i] <= fd.f[i]);
        const double env_bound = phi_inverse(m, s_between(env, -40.0, fc.x[i]), br.width());
        REQUIRE(fd.f[i] - fc.f[i] <= env_bound + 1e-12);
    }
}

TEST_CASE("profile residual is second order") {
    const auto env = generate_env(EnvKind::Periodic, 7, {-100.0, 100.0}, 0.001);
    const double r1 = max_residual(env, P2, corrector_profile(env, P2, 1.0, 2.0, Branch::Right, {0.0, 10.0}, 1e-6, 0.04));
    const double r2 = max_residual(env, P2, corrector_profile(env, P2, 1.0, 2.0, Branch::Right, {0.0, 10.0}, 1e-6, 0.02));
    CHECK(r1 / r2 >= 3.5);
    CHECK(r1 / r2 <= 4.5);
}

TEST_CASE("bracket invariance across kinds, families and levels") {
    const Hamiltonian Gs[] = {P2, Hamiltonian::log_quasiconvex()};
    for (EnvKind k : {EnvKind::IidInterp, EnvKind::GaussSquash, EnvKind::CoupledSingular}) {
        const auto env = generate_env(k, 5, {-1200.0, 100.0}, 0.01);
        for (const auto& G : Gs) {
            for (double lambda : {1.0, 1.5, 3.0}) {
                const auto p = corrector_profile(env, G, 1.0, lambda, Branch::Right, {0.0, 20.0}, 1e-3, 0.01);
                const double lo = G.branch_inverse(Branch::Right, lambda - 1.0);
                const double hi = G.branch_inverse(Branch::Right, lambda);
                for (double f : p.f) {
                    REQUIRE(f >= lo - 1e-9);
                    REQUIRE(f <= hi + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("theta on a constant medium is the branch inverse") {
    const auto env = constant_env(0.0, {-10.0, 110.0});
    for (double lambda : {0.5, 2.0, 4.0}) {
        const ThetaEstimate t = estimate_theta(env, P2, 1.0, lambda, Branch::Right, 100.0, 20, 1e-6, 0.01);
        CHECK(t.mean == doctest::Approx(std::sqrt(lambda)).epsilon(1e-12));
        CHECK(t.ci_halfwidth <= 1e-12);
    }
}

TEST_CASE("periodic theta equals the one-period Poincare oracle") {
    const auto env = generate_env(EnvKind::Periodic, 3, {-20.0, 120.0}, 0.001);
    const ThetaEstimate t = estimate_theta(env, P2, 1.0, 2.0, Branch::Right, 100.0, 20, 1e-9, 0.001);
    const double ref = oracle::periodic_theta(env, [](double p) { return p * p; }, 1.0, 2.0, 0.0, 1.0, std::sqrt(2.0), 1000);
    CHECK(t.mean == doctest::Approx(ref).epsilon(1e-6).scale(1.0));
    CHECK(t.ci_halfwidth <= 1e-6);
}

TEST_CASE("theta lies strictly inside the bracket on an iid medium") {
    const auto env = generate_env(EnvKind::IidInterp, 42, {-20.0, 2010.0}, 0.01);
    const ThetaEstimate t = estimate_theta(env, P2, 1.0, 2.0, Branch::Right, 2000.0, 20, 1e-6, 0.01);
    CHECK(t.mean - t.ci_halfwidth > 1.0);
    CHECK(t.mean + t.ci_halfwidth < std::sqrt(2.0));
    CHECK(t.n_batches == 20);
    CHECK(t.window_length == doctest::Approx(2000.0));
}

TEST_CASE("reflection symmetry of theta") {
    // The reflected periodic medium is the same law with phase -U, and theta
    // does not depend on the phase.
    const auto per = generate_env(EnvKind::Periodic, 3, {-120.0, 120.0}, 0.001);
    const auto t1 = estimate_theta(per, P2, 1.0, 2.0, Branch::Left, 100.0, 20, 1e-9, 0.001);
    const auto t2 = estimate_theta(per, P2, 1.0, 2.0, Branch::Right, 100.0, 20, 1e-9, 0.001);
    CHECK(t1.mean == doctest::Approx(-t2.mean).epsilon(1e-6).scale(1.0));

    const auto iid = generate_env(EnvKind::IidInterp, 42, {-2100.0, 2100.0}, 0.01);
    const auto s1 = estimate_theta(iid, P2, 1.0, 2.0, Branch::Left, 2000.0, 20, 1e-6, 0.01);
    const auto s2 = estimate_theta(iid, P2, 1.0, 2.0, Branch::Right, 2000.0, 20, 1e-6, 0.01);
    CHECK(std::abs(s1.mean + s2.mean) <= s1.ci_halfwidth + s2.ci_halfwidth);
}

TEST_CASE("theta increments respect the rate bounds on a periodic medium") {
    const auto env = generate_env(EnvKind::Periodic, 3, {-20.0, 120.0}, 0.001);
    const double eps = 0.25;
    double prev = estimate_theta(env, P2, 1.0, 1.5, Branch::Right, 100.0, 20, 1e-9, 0.001).mean;
    for (double lambda = 1.5; lambda < 3.0; lambda += eps) {
        const double next = estimate_theta(env, P2, 1.0, lambda + eps, Branch::Right, 100.0, 20, 1e-9, 0.001).mean;
        const double kappa = P2.lipschitz_on({P2.branch_inverse(Branch::Right, lambda - 1.0),
                                              P2.branch_inverse(Branch::Right, lambda + eps)});
        const double upper = inverse_modulus(P2, Branch::Right, {lambda - 1.0, lambda + eps}, eps);
        CHECK(next - prev >= eps / kappa - 1e-6);
        CHECK(next - prev <= upper + 1e-6);
        prev = next;
    }
}

TEST_CASE("profile CSV carries the metadata header") {
    const auto env = constant_env(1.0);
    const auto p = corrector_profile(env, P2, 1.0, 2.0, Branch::Right, {0.0, 1.0}, 1e-6, 0.5);
    std::ostringstream os;
    write_profile(os, p);
    const std::string s = os.str();
    CHECK(s.find("# lambda 2\n") != std::string::npos);
    CHECK(s.find("# branch 2\n") != std::string::npos);
    CHECK(s.find("# cert_bound ") != std::string::npos);
    CHECK(s.find("x,f\n0,1\n0.5,1\n1,1\n") != std::string::npos);
}

TEST_CASE("windows that cannot hold the burn-in are rejected") {
    const auto env = generate_env(EnvKind::IidInterp, 1, {-5.0, 20.0}, 0.01);
    CHECK_THROWS_AS(corrector_profile(env, P2, 1.0, 2.0, Branch::Right, {0.0, 10.0}, 1e-6, 0.01), PreconditionError);
    CHECK_THROWS_AS(estimate_theta(env, P2, 1.0, 2.0, Branch::Right, 10.0, 5, 1e-6, 0.01), PreconditionError);
}
