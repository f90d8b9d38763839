#include <cmath>

#include "doctest.h"
#include "hjlab/errors.hpp"
#include "hjlab/gluing.hpp"

using namespace hjlab;

namespace {

const Hamiltonian P2 = Hamiltonian::power(2.0);

struct HillCase {
    EnvRealization env;
    HillWitness hill;
};

// Low-diffusion iid medium with a hill long enough for the bridge budget at delta = 1/4.
HillCase iid_hill() {
    EnvParams p;
    p.a0 = 0.1;
    auto env = generate_env(EnvKind::IidInterp, 42, {-3000.0, 3000.0}, 0.01, p);
    const auto search = generate_env(EnvKind::IidInterp, 42, {-1500.0, 1500.0}, 0.01, p);
    auto hill = find_hill(search, 0.75, 22.0);
    REQUIRE(hill);
    return {std::move(env), *hill};
}

}  // namespace

TEST_CASE("glue order names round-trip") {
    for (GlueOrder o : {GlueOrder::TwoToOne, GlueOrder::OneToTwo}) CHECK(parse_glue_order(to_string(o)) == o);
    CHECK_THROWS_AS(parse_glue_order("sideways"), PreconditionError);
}

TEST_CASE("gluing on a constant full hill is the zero profile") {
    EnvParams p;
    p.v0 = 1.0;
    const auto env = generate_env(EnvKind::Constant, 1, {-100.0, 100.0}, 0.01, p);
    const auto hill = find_hill(env, 0.75, 22.0);
    REQUIRE(hill);
    const GluedProfile gp = build_glued_profile(env, P2, 1.0, 0.25, *hill, GlueOrder::TwoToOne, 1e-3, 0.01, 0.0);
    CHECK(gp.residual_band.lo == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gp.residual_band.hi == doctest::Approx(1.0).epsilon(1e-12));
    for (double f : gp.f) REQUIRE(std::abs(f) <= 1e-12);
}

TEST_CASE("low-slope points, band and bridge on an iid hill") {
    const auto [env, hill] = iid_hill();
    const double beta = 1.0, delta = 0.25;
    for (GlueOrder order : {GlueOrder::TwoToOne, GlueOrder::OneToTwo}) {
        CAPTURE(to_string(order));
        const GluedProfile gp = build_glued_profile(env, P2, beta, delta, hill, order, 1e-3, 0.01);
        CHECK(gp.z1 >= hill.L1);
        CHECK(gp.z1 <= hill.L2);
        CHECK(gp.z2 >= hill.L1);
        CHECK(gp.z2 <= hill.L2);
        if (order == GlueOrder::TwoToOne) CHECK(gp.z2 < gp.z1);
        else CHECK(gp.z1 < gp.z2);
        CHECK(gp.budget_met);
        CHECK(gp.band_within(10.0 * 0.01));
        CHECK(gp.bridge_max_G <= 3.0 * delta + 1e-9);

        // The low-slope points sit where G of the corrector is at most 2 delta.
        const double x1 = gp.z1, x2 = gp.z2;
        auto f_at = [&](double x) {
            const auto k = static_cast<std::size_t>(std::llround((x - gp.x.front()) / gp.dx));
            return gp.f[k];
        };
        CHECK(P2(f_at(x1)) <= 2.0 * delta + 1e-9);
        CHECK(P2(f_at(x2)) <= 2.0 * delta + 1e-9);

        // Smooth joins: no jump in f larger than a few steps of the ODE slope.
        double jump = 0.0;
        for (std::size_t i = 1; i < gp.f.size(); ++i) jump = std::max(jump, std::abs(gp.f[i] - gp.f[i - 1]));
        CHECK(jump <= 0.01 * (2.0 + beta) / 0.1 * 1.01);

        const auto F = gp.antiderivative();
        REQUIRE(F.size() == gp.f.size());
        CHECK(F.front() == 0.0);
        for (std::size_t i = 1; i < F.size(); ++i)
            REQUIRE(F[i] - F[i - 1] == doctest::Approx(0.5 * gp.dx * (gp.f[i] + gp.f[i - 1])).epsilon(1e-12));
    }
}

TEST_CASE("gluing rejects hills too short for the bridge") {
    const auto [env, hill] = iid_hill();
    HillWitness small = hill;
    small.L2 = small.L1 + 0.5;
    small.scaled_length = 5.0;
    CHECK_THROWS_AS(build_glued_profile(env, P2, 1.0, 0.25, small, GlueOrder::TwoToOne, 1e-3, 0.01),
                    PreconditionError);
}
