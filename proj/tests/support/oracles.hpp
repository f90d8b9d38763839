#pragma once

// Independent reference computations for the test suites. None of these call
// the library's integrators, quadrature or search routines.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "hjlab/environment.hpp"

namespace oracle {

/// Romberg table for int_a^b g over 2^k panels, k = 0..levels.
inline double romberg(const std::function<double(double)>& g, double a, double b, int levels) {
    std::vector<std::vector<double>> R(levels + 1, std::vector<double>(levels + 1));
    double h = b - a;
    R[0][0] = 0.5 * h * (g(a) + g(b));
    for (int k = 1; k <= levels; ++k) {
        h *= 0.5;
        double sum = 0.0;
        const long n = 1L << (k - 1);
        for (long i = 1; i <= n; ++i) sum += g(a + static_cast<double>(2 * i - 1) * h);
        R[k][0] = 0.5 * R[k - 1][0] + h * sum;
        double f = 1.0;
        for (int j = 1; j <= k; ++j) {
            f *= 4.0;
            R[k][j] = R[k][j - 1] + (R[k][j - 1] - R[k - 1][j - 1]) / (f - 1.0);
        }
    }
    return R[levels][levels];
}

/// Plain RK4 for a f' + G(f) + beta V = lambda moving rightward from (x0, c)
/// with a fixed step h; returns f at x0 + k h for k = 0..n.
inline std::vector<double> rk4_right(const hjlab::EnvRealization& env, const std::function<double(double)>& G,
                                     double beta, double lambda, double x0, double c, double h, long n) {
    auto rhs = [&](double x, double f) {
        const auto [a, v] = env.sample(x);
        return (lambda - G(f) - beta * v) / a;
    };
    std::vector<double> out{c};
    double f = c;
    for (long k = 0; k < n; ++k) {
        const double x = x0 + static_cast<double>(k) * h;
        const double k1 = rhs(x, f);
        const double k2 = rhs(x + 0.5 * h, f + 0.5 * h * k1);
        const double k3 = rhs(x + 0.5 * h, f + 0.5 * h * k2);
        const double k4 = rhs(x + h, f + h * k3);
        f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push_back(f);
    }
    return out;
}

/// Stationary periodic solution of the corrector ODE on a period-1 medium:
/// the fixed point of the one-period map, found by bisection on P(c) - c
/// over [lo, hi]. Returns the one-period average of f (Simpson rule on the
/// RK4 nodes, so n must be even).
inline double periodic_theta(const hjlab::EnvRealization& env, const std::function<double(double)>& G, double beta,
                             double lambda, double x0, double lo, double hi, long n) {
    const double h = 1.0 / static_cast<double>(n);
    auto period_map = [&](double c) { return rk4_right(env, G, beta, lambda, x0, c, h, n).back(); };
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (period_map(mid) > mid) lo = mid;
        else hi = mid;
    }
    const auto f = rk4_right(env, G, beta, lambda, x0, 0.5 * (lo + hi), h, n);
    double s = f.front() + f.back();
    for (long k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f[static_cast<std::size_t>(k)];
    return s * h / 3.0;
}

struct Hill {
    double L1, L2, s_len;
};

/// Quadratic scan: every pair of nodes (i, j) with V >= h on i..j and
/// s_j - s_i >= C; returns the maximal run containing the smallest such i.
inline std::optional<Hill> brute_force_hill(const hjlab::EnvRealization& env, double h, double C) {
    const auto& v = env.v_vals();
    const std::size_t n = v.size();
    auto s_of = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t k = i; k < j; ++k) s += 0.5 * env.dx() * (1.0 / env.a_vals()[k] + 1.0 / env.a_vals()[k + 1]);
        return s;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            bool all = true;
            for (std::size_t k = i; k <= j && all; ++k) all = v[k] >= h;
            if (!all) break;
            if (s_of(i, j) >= C - 1e-9) {
                std::size_t a = i, b = j;
                while (a > 0 && v[a - 1] >= h) --a;
                while (b + 1 < n && v[b + 1] >= h) ++b;
                return Hill{env.node_x(a), env.node_x(b), s_of(a, b)};
            }
        }
    }
    return std::nullopt;
}

/// u = a log w with w_t = a w_xx + (beta/a) V w: the Hopf-Cole transform of
/// u_t = a u_xx + (u_x)^2 + beta V for constant a. Crank-Nicolson on [-M, M]
/// with zero-flux ends, initial u = 0. Returns u(T, 0).
inline double hopf_cole_center(const hjlab::EnvRealization& env, double a, double beta, double M, double T, double dx,
                               double dt) {
    const int n = static_cast<int>(std::llround(2.0 * M / dx));
    std::vector<double> V(n + 1), w(n + 1, 1.0), A(n + 1), B(n + 1), Cc(n + 1), R(n + 1);
    for (int j = 0; j <= n; ++j) V[j] = env.v_at(-M + j * dx);
    const long steps = static_cast<long>(std::ceil(T / dt));
    dt = T / static_cast<double>(steps);
    const double r = a * dt / (dx * dx);
    double log_scale = 0.0;
    for (long s = 0; s < steps; ++s) {
        for (int j = 0; j <= n; ++j) {
            const double wm = j > 0 ? w[j - 1] : w[1];
            const double wp = j < n ? w[j + 1] : w[n - 1];
            const double c = (beta / a) * V[j] * dt;
            R[j] = w[j] + 0.5 * r * (wm - 2.0 * w[j] + wp) + 0.5 * c * w[j];
            A[j] = -0.5 * r;
            Cc[j] = -0.5 * r;
            B[j] = 1.0 + r - 0.5 * c;
            if (j == 0) Cc[j] = -r;
            if (j == n) A[j] = -r;
        }
        for (int j = 1; j <= n; ++j) {
            const double m = A[j] / B[j - 1];
            B[j] -= m * Cc[j - 1];
            R[j] -= m * R[j - 1];
        }
        w[n] = R[n] / B[n];
        for (int j = n - 1; j >= 0; --j) w[j] = (R[j] - Cc[j] * w[j + 1]) / B[j];
        const double mx = *std::max_element(w.begin(), w.end());
        for (double& x : w) x /= mx;
        log_scale += std::log(mx);
    }
    return a * (std::log(w[n / 2]) + log_scale);
}

}  // namespace oracle
