#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "hjlab/environment.hpp"
#include "hjlab/errors.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

EnvRealization constant_env(double a0, double v0, Interval w = {-10.0, 10.0}, double dx = 0.01) {
    EnvParams p;
    p.a0 = a0;
    p.v0 = v0;
    return generate_env(EnvKind::Constant, 1, w, dx, p);
}

const EnvKind kAllKinds[] = {EnvKind::IidInterp, EnvKind::GaussSquash, EnvKind::Periodic, EnvKind::CoupledSingular,
                             EnvKind::Constant};

}  // namespace

TEST_CASE("constant generator has constant columns") {
    const auto env = constant_env(1.0, 0.0);
    for (double v : env.v_vals()) CHECK(v == 0.0);
    for (double a : env.a_vals()) CHECK(a == 1.0);
    CHECK_FALSE(env.law().full_range());
}

TEST_CASE("periodic potential stays in [0, 1]") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto env = generate_env(EnvKind::Periodic, seed, {0.0, 1.0}, 0.001);
        CHECK(*std::max_element(env.v_vals().begin(), env.v_vals().end()) <= 1.0);
        CHECK(*std::min_element(env.v_vals().begin(), env.v_vals().end()) >= 0.0);
    }
}

TEST_CASE("same seed regenerates bit-identical arrays") {
    const auto a = generate_env(EnvKind::IidInterp, 42, {-100.0, 100.0}, 0.01);
    const auto b = generate_env(EnvKind::IidInterp, 42, {-100.0, 100.0}, 0.01);
    CHECK(a.a_vals() == b.a_vals());
    CHECK(a.v_vals() == b.v_vals());
    CHECK(a.s_table() == b.s_table());
    const auto c = generate_env(EnvKind::IidInterp, 43, {-100.0, 100.0}, 0.01);
    CHECK(a.v_vals() != c.v_vals());
}

TEST_CASE("sample returns stored values at nodes and interpolates between") {
    const auto env = constant_env(1.0, 0.0);
    const auto [a, v] = sample(env, 3.7);
    CHECK(a == 1.0);
    CHECK(v == 0.0);

    const auto iid = generate_env(EnvKind::IidInterp, 5, {-20.0, 20.0}, 0.01);
    for (std::size_t j = 0; j < iid.size(); j += 97) {
        CHECK(iid.v_at(iid.node_x(j)) == iid.v_vals()[j]);
        CHECK(iid.a_at(iid.node_x(j)) == iid.a_vals()[j]);
    }
    const double xm = 0.5 * (iid.node_x(100) + iid.node_x(101));
    CHECK(iid.v_at(xm) == doctest::Approx(0.5 * (iid.v_vals()[100] + iid.v_vals()[101])).epsilon(1e-12));
}

TEST_CASE("periodic law peaks where the phase puts it") {
    const EnvLaw law(EnvKind::Periodic, 11, {});
    CHECK(law.at(0.5 - law.phase()).second == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("queries outside the window are rejected") {
    const auto env = constant_env(1.0, 0.0);
    CHECK_THROWS_AS(sample(env, 10.5), PreconditionError);
    CHECK_THROWS_AS(s_between(env, -11.0, 0.0), PreconditionError);
    CHECK_THROWS_AS(parse_env_kind("brownian"), PreconditionError);
    CHECK_THROWS_AS(generate_env(EnvKind::GaussSquash, 1, {0.0, 1.0}, 0.01), PreconditionError);
}

TEST_CASE("s_between on constant diffusion") {
    CHECK(s_between(constant_env(1.0, 0.0), 0.0, 5.0) == doctest::Approx(5.0).epsilon(1e-13));
    CHECK(s_between(constant_env(0.5, 0.0), 0.0, 5.0) == doctest::Approx(10.0).epsilon(1e-13));
}

TEST_CASE("s_between on gauss-squash converges to a Romberg oracle of the law") {
    EnvParams p;
    p.corr_length = 1.0;
    const EnvLaw law(EnvKind::GaussSquash, 9, p);
    const double exact = oracle::romberg([&](double x) { return 1.0 / law.at(x).first; }, 0.0, 5.0, 18);

    std::vector<double> err;
    for (double dx : {1e-3, 5e-4, 2.5e-4, 1e-4}) {
        const auto env = generate_env(EnvKind::GaussSquash, 9, {-2.0, 7.0}, dx, p);
        err.push_back(std::abs(s_between(env, 0.0, 5.0) - exact));
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(err[3] <= 1e-8);
}

TEST_CASE("environment invariants hold for every kind") {
    for (EnvKind k : kAllKinds) {
        CAPTURE(to_string(k));
        const auto env = generate_env(k, 17, {-50.0, 50.0}, 0.01);
        for (std::size_t j = 0; j < env.size(); ++j) {
            REQUIRE(env.a_vals()[j] > 0.0);
            REQUIRE(env.a_vals()[j] <= 1.0);
            REQUIRE(env.v_vals()[j] >= 0.0);
            REQUIRE(env.v_vals()[j] <= 1.0);
            if (j > 0) REQUIRE(env.s_table()[j] - env.s_table()[j - 1] >= env.dx() * (1.0 - 1e-12));
        }
        const double xyz[] = {-31.234, 2.5, 40.001};
        CHECK(s_between(env, xyz[0], xyz[1]) + s_between(env, xyz[1], xyz[2]) ==
              doctest::Approx(s_between(env, xyz[0], xyz[2])).epsilon(1e-12));
        CHECK(s_between(env, xyz[0], xyz[2]) >= xyz[2] - xyz[0] - 1e-12);
    }
}

TEST_CASE("find_hill agrees with a brute-force scan") {
    const auto env = generate_env(EnvKind::IidInterp, 42, {0.0, 60.0}, 0.01);
    for (double h : {0.5, 0.7}) {
        for (double C : {1.0, 2.0}) {
            CAPTURE(h);
            CAPTURE(C);
            const auto w = find_hill(env, h, C);
            const auto o = oracle::brute_force_hill(env, h, C);
            REQUIRE(w.has_value() == o.has_value());
            if (!w) continue;
            CHECK(w->L1 == doctest::Approx(o->L1).epsilon(1e-12));
            CHECK(w->L2 == doctest::Approx(o->L2).epsilon(1e-12));
            CHECK(w->scaled_length == doctest::Approx(o->s_len).epsilon(1e-10));
            CHECK(w->v_min_on_interval >= h);
            CHECK(w->L1 < w->L2);
        }
    }
}

TEST_CASE("periodic medium has no long hills") {
    // V >= 0.9 sublevel length of sin^2 is (pi - 2 asin(sqrt 0.9)) / pi.
    const double run = (std::numbers::pi - 2.0 * std::asin(std::sqrt(0.9))) / std::numbers::pi;
    CHECK(run == doctest::Approx(0.2048).epsilon(1e-3));
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto env = generate_env(EnvKind::Periodic, seed, {-200.0, 200.0}, 0.01);
        CHECK_FALSE(find_hill(env, 0.9, 1.0));
    }
}

TEST_CASE("constant medium at v0 = 1 is one hill") {
    const auto env = constant_env(1.0, 1.0);
    const auto w = find_hill(env, 0.5, 20.0);
    REQUIRE(w);
    CHECK(w->L1 == doctest::Approx(env.x_min()));
    CHECK(w->L2 == doctest::Approx(env.x_max()));
}

TEST_CASE("streamed hill scan matches the stored realization") {
    for (EnvKind k : {EnvKind::IidInterp, EnvKind::GaussSquash, EnvKind::CoupledSingular}) {
        const auto env = generate_env(k, 42, {-300.0, 300.0}, 0.01);
        for (double h : {0.5, 0.75}) {
            for (double C : {1.0, 5.0}) {
                const auto a = find_hill(env, h, C);
                const auto b = find_hill(env.law(), {-300.0, 300.0}, 0.01, h, C);
                REQUIRE(a.has_value() == b.has_value());
                if (!a) continue;
                CHECK(a->L1 == b->L1);
                CHECK(a->L2 == b->L2);
                CHECK(a->scaled_length == b->scaled_length);
                CHECK(a->v_min_on_interval == b->v_min_on_interval);
            }
        }
    }
}

TEST_CASE("iid-interp finds every hill in the matrix with window doubling") {
    const EnvLaw law(EnvKind::IidInterp, 42, {});
    int found = 0;
    for (double h : {0.25, 0.5, 0.75}) {
        for (double C : {1.0, 5.0, 10.0}) {
            const HillSearch r = find_hill_doubling(law, 0.0, 100.0, 0.05, h, C, 20);
            if (r.witness) {
                ++found;
                CHECK(r.witness->v_min_on_interval >= h);
                CHECK(r.witness->scaled_length >= C);
            } else {
                MESSAGE("no witness for h=" << h << " C=" << C << " up to half-width " << r.window.hi);
            }
        }
    }
    CHECK(found == 9);
}

TEST_CASE("coupled-singular medium carries singular hills and long scaled hills") {
    const auto env = generate_env(EnvKind::CoupledSingular, 3, {-500.0, 500.0}, 0.01);
    for (double c : {0.2, 0.1, 0.05}) {
        const auto z = check_singular_hill(env, c);
        REQUIRE(z);
        CHECK(env.a_at(*z) <= c);
        CHECK(env.v_at(*z) >= 1.0 - c);
    }
    for (double C : {1.0, 5.0, 10.0}) CHECK(find_hill(env, 0.5, C).has_value());
    CHECK_FALSE(check_singular_hill(generate_env(EnvKind::IidInterp, 3, {-50.0, 50.0}, 0.01), 0.5));
    CHECK_FALSE(check_singular_hill(constant_env(0.3, 0.0), 0.9));
}

TEST_CASE("shift reproduces the law at an offset") {
    const auto env = generate_env(EnvKind::IidInterp, 42, {-30.0, 30.0}, 0.01);
    const auto same = shift(env, 0.0);
    CHECK(same.v_vals() == env.v_vals());
    CHECK(same.a_vals() == env.a_vals());

    const auto s = shift(env, 2.5);
    for (double x = -20.0; x <= 20.0; x += 0.37)
        CHECK(s.v_at(x) == doctest::Approx(env.v_at(x + 2.5)).epsilon(1e-12));
    for (std::size_t j = 0; j + 250 < env.size(); j += 31) CHECK(s.v_vals()[j] == env.v_vals()[j + 250]);

    const auto back = shift(shift(env, 1.234567), -1.234567);
    for (double x = -20.0; x <= 20.0; x += 0.41) CHECK(back.v_at(x) == doctest::Approx(env.v_at(x)).epsilon(1e-12));

    const auto per = generate_env(EnvKind::Periodic, 4, {-5.0, 5.0}, 0.01);
    const auto per1 = shift(per, 1.0);
    for (std::size_t j = 0; j < per.size(); ++j)
        REQUIRE(per1.v_vals()[j] == doctest::Approx(per.v_vals()[j]).epsilon(1e-12));
}

TEST_CASE("env files round-trip bit-exactly") {
    for (EnvKind k : kAllKinds) {
        const auto env = shift(generate_env(k, 23, {-10.0, 10.0}, 0.01), 0.123);
        std::stringstream ss;
        write_env(ss, env);
        const auto back = read_env(ss);
        CHECK(back.kind() == env.kind());
        CHECK(back.seed() == env.seed());
        CHECK(back.a_vals() == env.a_vals());
        CHECK(back.v_vals() == env.v_vals());
        CHECK(back.s_table() == env.s_table());
        std::stringstream again;
        write_env(again, back);
        std::stringstream first;
        write_env(first, env);
        CHECK(again.str() == first.str());
    }
}
