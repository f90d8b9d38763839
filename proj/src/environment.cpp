#include "hjlab/environment.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hjlab/errors.hpp"
#include "hjlab/numfmt.hpp"

namespace hjlab {

namespace {

constexpr double kSnap = 1e-9;

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Counter-based uniform in [0,1): a pure function of (seed, stream, index).
double uniform01(std::uint64_t seed, std::uint64_t stream, std::int64_t k) {
    const std::uint64_t h = mix64(mix64(mix64(seed) ^ stream) ^ static_cast<std::uint64_t>(k));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double standard_normal(std::uint64_t seed, std::uint64_t stream, std::int64_t k) {
    const double u1 = 1.0 - uniform01(seed, stream, 2 * k);  // (0, 1]
    const double u2 = uniform01(seed, stream, 2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double bump(double r) {
    const double r2 = r * r;
    return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
}

double logistic(double y) { return 1.0 / (1.0 + std::exp(-y)); }

constexpr std::uint64_t kStreamPhase = 0;
constexpr std::uint64_t kStreamV = 1;
constexpr std::uint64_t kStreamA = 2;

// Lattice spacing of the Gaussian moving average, in units of corr_length.
constexpr double kGaussLatticeRatio = 0.25;

}  // namespace

std::string_view to_string(EnvKind kind) {
    switch (kind) {
        case EnvKind::IidInterp: return "iid-interp";
        case EnvKind::GaussSquash: return "gauss-squash";
        case EnvKind::Periodic: return "periodic";
        case EnvKind::CoupledSingular: return "coupled-singular";
        case EnvKind::Constant: return "constant";
    }
    return "unknown";
}

EnvKind parse_env_kind(std::string_view name) {
    for (auto k : {EnvKind::IidInterp, EnvKind::GaussSquash, EnvKind::Periodic, EnvKind::CoupledSingular,
                   EnvKind::Constant}) {
        if (to_string(k) == name) return k;
    }
    throw PreconditionError("unknown environment kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// EnvLaw

EnvLaw::EnvLaw(EnvKind kind, std::uint64_t seed, EnvParams params) : kind_(kind), seed_(seed), params_(params) {
    require(params_.a0 > 0.0 && params_.a0 <= 1.0, "a0 must lie in (0, 1]");
    require(params_.v0 >= 0.0 && params_.v0 <= 1.0, "v0 must lie in [0, 1]");
    require(params_.corr_length > 0.0, "corr_length must be positive");
    require(params_.kappa > 0.0 && params_.kappa <= 1.0, "kappa must lie in (0, 1]");
    require(params_.gain > 0.0, "gain must be positive");
    require(params_.a_floor > 0.0 && params_.a_floor < 1.0, "a_floor must lie in (0, 1)");
    require(params_.peak_exponent >= 1.0, "peak_exponent must be >= 1");
    phase_ = uniform01(seed_, kStreamPhase, 0);
    if (kind_ == EnvKind::GaussSquash) {
        // Continuum approximation of sum_k K(r_k)^2 so that Var W ~ 1.
        const int n = 4000;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double r = -1.0 + 2.0 * i / n;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * bump(r) * bump(r);
        }
        acc *= (2.0 / n) / 3.0;
        kernel_norm_ = std::sqrt(acc / kGaussLatticeRatio);
    }
}

Interval EnvLaw::potential_range() const {
    if (kind_ == EnvKind::Constant) return {params_.v0, params_.v0};
    return {0.0, 1.0};
}

double EnvLaw::iid_value(std::int64_t k, std::uint64_t stream) const { return uniform01(seed_, stream, k); }

double EnvLaw::gauss_field(double x, std::uint64_t stream) const {
    const double ell = params_.corr_length;
    const double h = kGaussLatticeRatio * ell;
    // Lattice points (k + phase) * h within one kernel radius of x.
    const double y = x / h - phase_;
    const auto k_lo = static_cast<std::int64_t>(std::floor(y - ell / h));
    const auto k_hi = static_cast<std::int64_t>(std::ceil(y + ell / h));
    double w = 0.0;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
        const double r = (x - (static_cast<double>(k) + phase_) * h) / ell;
        const double kr = bump(r);
        if (kr > 0.0) w += standard_normal(seed_, stream, k) * kr;
    }
    return w / kernel_norm_;
}

std::pair<double, double> EnvLaw::at(double x) const {
    switch (kind_) {
        case EnvKind::IidInterp: {
            const double y = x - phase_;
            const double fl = std::floor(y);
            const auto k = static_cast<std::int64_t>(fl);
            const double t = y - fl;
            const double v = (1.0 - t) * iid_value(k, kStreamV) + t * iid_value(k + 1, kStreamV);
            return {params_.a0, v};
        }
        case EnvKind::GaussSquash: {
            const double v = logistic(params_.gain * gauss_field(x, kStreamV));
            const double a = params_.kappa + (1.0 - params_.kappa) * logistic(params_.gain * gauss_field(x, kStreamA));
            return {a, v};
        }
        case EnvKind::Periodic: {
            const double s = std::sin(std::numbers::pi * (x + phase_));
            return {1.0, s * s};
        }
        case EnvKind::CoupledSingular: {
            // Peaked iid values so that W comes arbitrarily close to 1; a = 1 - W
            // (floored) makes the diffusion small exactly where V is high.
            const double y = x - phase_;
            const double fl = std::floor(y);
            const auto k = static_cast<std::int64_t>(fl);
            const double t = y - fl;
            const double q = params_.peak_exponent;
            const double w0 = 1.0 - std::pow(1.0 - iid_value(k, kStreamV), q);
            const double w1 = 1.0 - std::pow(1.0 - iid_value(k + 1, kStreamV), q);
            const double w = (1.0 - t) * w0 + t * w1;
            return {std::clamp(1.0 - w, params_.a_floor, 1.0), w};
        }
        case EnvKind::Constant:
            return {params_.a0, params_.v0};
    }
    return {1.0, 0.0};
}

// ---------------------------------------------------------------------------
// EnvRealization

void EnvRealization::fill_from_law() {
    const double offset_frac = shift_frac_;
    for (std::size_t j = 0; j < a_.size(); ++j) {
        const std::int64_t k = k_first_ + static_cast<std::int64_t>(j) + shift_steps_;
        const double xa = static_cast<double>(k) * dx_ + offset_frac;
        auto [a, v] = law_.at(xa);
        a_[j] = a;
        v_[j] = v;
    }
    build_s_table();
}

void EnvRealization::build_s_table() {
    s_.assign(a_.size(), 0.0);
    for (std::size_t j = 1; j < a_.size(); ++j) s_[j] = s_[j - 1] + 0.5 * dx_ * (1.0 / a_[j - 1] + 1.0 / a_[j]);
}

double EnvRealization::a_max() const { return *std::max_element(a_.begin(), a_.end()); }
double EnvRealization::v_min_observed() const { return *std::min_element(v_.begin(), v_.end()); }
double EnvRealization::v_max_observed() const { return *std::max_element(v_.begin(), v_.end()); }

std::pair<std::size_t, double> EnvRealization::locate(double x) const {
    const double t = x / dx_ - static_cast<double>(k_first_);
    const double n1 = static_cast<double>(size() - 1);
    if (!(t >= -kSnap && t <= n1 + kSnap)) {
        std::ostringstream msg;
        msg << "x = " << x << " outside environment window [" << x_min() << ", " << x_max() << "]";
        throw PreconditionError(msg.str());
    }
    const double r = std::round(t);
    if (std::abs(t - r) < kSnap) return {static_cast<std::size_t>(r), 0.0};
    const double fl = std::floor(t);
    return {static_cast<std::size_t>(fl), t - fl};
}

std::pair<double, double> EnvRealization::sample(double x) const {
    auto [j, w] = locate(x);
    if (w == 0.0) return {a_[j], v_[j]};
    return {(1.0 - w) * a_[j] + w * a_[j + 1], (1.0 - w) * v_[j] + w * v_[j + 1]};
}

double EnvRealization::s_at(double x) const {
    auto [j, w] = locate(x);
    if (w == 0.0) return s_[j];
    const double a = (1.0 - w) * a_[j] + w * a_[j + 1];
    return s_[j] + 0.5 * w * dx_ * (1.0 / a_[j] + 1.0 / a);
}

EnvRealization generate_env(EnvKind kind, std::uint64_t seed, Interval window, double dx_env,
                            const EnvParams& params) {
    require(dx_env > 0.0, "dx_env must be positive");
    require(window.hi > window.lo, "environment window is degenerate");
    EnvRealization env;
    env.law_ = EnvLaw(kind, seed, params);
    if (kind == EnvKind::GaussSquash)
        require(window.width() >= 4.0 * params.corr_length, "window too small for the requested correlation length");
    env.dx_ = dx_env;
    env.k_first_ = static_cast<std::int64_t>(std::floor(window.lo / dx_env + kSnap));
    const auto k_last = static_cast<std::int64_t>(std::ceil(window.hi / dx_env - kSnap));
    require(k_last > env.k_first_, "window shorter than one grid step");
    const auto n = static_cast<std::size_t>(k_last - env.k_first_ + 1);
    env.a_.resize(n);
    env.v_.resize(n);
    env.fill_from_law();
    return env;
}

std::pair<double, double> sample(const EnvRealization& env, double x) { return env.sample(x); }

double s_between(const EnvRealization& env, double x1, double x2) {
    require(x1 <= x2, "s_between requires x1 <= x2");
    return env.s_at(x2) - env.s_at(x1);
}

EnvRealization shift(const EnvRealization& env, double z) {
    EnvRealization out = env;
    const double steps = z / env.dx_;
    const double r = std::round(steps);
    if (std::abs(steps - r) < kSnap) {
        out.shift_steps_ += static_cast<std::int64_t>(r);
    } else {
        out.shift_frac_ += z;
    }
    if (out.shift_steps_ == env.shift_steps_ && out.shift_frac_ == env.shift_frac_) return out;
    out.fill_from_law();
    return out;
}

std::optional<HillWitness> find_hill(const EnvRealization& env, double h, double C) {
    require(h > 0.0 && h < 1.0, "hill height must lie in (0, 1)");
    require(C > 0.0, "hill budget C must be positive");
    const auto& v = env.v_vals();
    const auto& s = env.s_table();
    const std::size_t n = v.size();
    std::size_t start = 0;
    bool in_streak = false;
    double vmin = 1.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const bool ok = j < n && v[j] >= h;
        if (ok) {
            if (!in_streak) {
                in_streak = true;
                start = j;
                vmin = v[j];
            } else {
                vmin = std::min(vmin, v[j]);
            }
            continue;
        }
        if (in_streak) {
            const std::size_t end = j - 1;
            const double len = s[end] - s[start];
            if (len >= C) return HillWitness{env.node_x(start), env.node_x(end), len, vmin};
            in_streak = false;
        }
    }
    return std::nullopt;
}

std::optional<HillWitness> find_hill(const EnvLaw& law, Interval window, double dx, double h, double C) {
    require(h > 0.0 && h < 1.0, "hill height must lie in (0, 1)");
    require(C > 0.0, "hill budget C must be positive");
    require(dx > 0.0 && window.hi > window.lo, "hill scan needs dx > 0 and a nondegenerate window");
    const auto k_first = static_cast<std::int64_t>(std::floor(window.lo / dx + kSnap));
    const auto k_last = static_cast<std::int64_t>(std::ceil(window.hi / dx - kSnap));
    double s = 0.0, a_prev = 0.0;
    double s_start = 0.0, s_end = 0.0, vmin = 1.0;
    std::int64_t start = 0, end = 0;
    bool in_streak = false;
    for (std::int64_t k = k_first; k <= k_last + 1; ++k) {
        bool ok = false;
        if (k <= k_last) {
            const auto [a, v] = law.at(static_cast<double>(k) * dx);
            if (k > k_first) s = s + 0.5 * dx * (1.0 / a_prev + 1.0 / a);
            a_prev = a;
            ok = v >= h;
            if (ok) {
                if (!in_streak) {
                    in_streak = true;
                    start = k;
                    s_start = s;
                    vmin = v;
                } else {
                    vmin = std::min(vmin, v);
                }
                end = k;
                s_end = s;
                continue;
            }
        }
        if (in_streak) {
            const double len = s_end - s_start;
            if (len >= C)
                return HillWitness{static_cast<double>(start) * dx, static_cast<double>(end) * dx, len, vmin};
            in_streak = false;
        }
    }
    return std::nullopt;
}

HillSearch find_hill_doubling(const EnvLaw& law, double center, double half_width, double dx, double h, double C,
                              int max_doublings) {
    require(half_width > 0.0 && max_doublings >= 0 && max_doublings <= 40, "invalid hill search schedule");
    HillSearch out;
    for (int k = 0; k <= max_doublings; ++k) {
        const double w = std::ldexp(half_width, k);
        out.window = {center - w, center + w};
        out.doublings = k;
        out.witness = find_hill(law, out.window, dx, h, C);
        if (out.witness) break;
    }
    return out;
}

std::optional<double> check_singular_hill(const EnvRealization& env, double c) {
    require(c > 0.0 && c < 1.0, "singular-hill level c must lie in (0, 1)");
    const auto& a = env.a_vals();
    const auto& v = env.v_vals();
    for (std::size_t j = 0; j < a.size(); ++j)
        if (a[j] <= c && v[j] >= 1.0 - c) return env.node_x(j);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Serialization

void write_env(std::ostream& os, const EnvRealization& env) {
    const auto& p = env.law().params();
    os << "# kind " << to_string(env.kind()) << '\n';
    os << "# seed " << env.seed() << '\n';
    os << "# dx_env " << format_double(env.dx()) << '\n';
    os << "# k_first " << env.k_first() << '\n';
    os << "# shift_steps " << env.shift_steps() << '\n';
    os << "# shift_frac " << format_double(env.shift_frac()) << '\n';
    os << "# params a0=" << format_double(p.a0) << " v0=" << format_double(p.v0)
       << " corr_length=" << format_double(p.corr_length) << " kappa=" << format_double(p.kappa)
       << " gain=" << format_double(p.gain) << " a_floor=" << format_double(p.a_floor)
       << " peak_exponent=" << format_double(p.peak_exponent) << '\n';
    os << "x,a,V,s\n";
    for (std::size_t j = 0; j < env.size(); ++j) {
        os << format_double(env.node_x(j)) << ',' << format_double(env.a_vals()[j]) << ','
           << format_double(env.v_vals()[j]) << ',' << format_double(env.s_table()[j]) << '\n';
    }
}

EnvRealization read_env(std::istream& is) {
    EnvRealization env;
    std::string line;
    EnvKind kind = EnvKind::Constant;
    std::uint64_t seed = 0;
    EnvParams params;
    bool have_kind = false, have_seed = false, have_dx = false;
    std::vector<double> xs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            std::string rest;
            std::getline(ls >> std::ws, rest);
            if (key == "kind") {
                kind = parse_env_kind(rest);
                have_kind = true;
            } else if (key == "seed") {
                seed = static_cast<std::uint64_t>(std::stoull(rest));
                have_seed = true;
            } else if (key == "dx_env") {
                env.dx_ = parse_double(rest);
                have_dx = true;
            } else if (key == "k_first") {
                env.k_first_ = parse_int(rest);
            } else if (key == "shift_steps") {
                env.shift_steps_ = parse_int(rest);
            } else if (key == "shift_frac") {
                env.shift_frac_ = parse_double(rest);
            } else if (key == "params") {
                std::istringstream ps(rest);
                std::string kv;
                while (ps >> kv) {
                    const auto eq = kv.find('=');
                    if (eq == std::string::npos) throw PreconditionError("bad params entry '" + kv + "'");
                    const std::string k = kv.substr(0, eq);
                    const double v = parse_double(kv.substr(eq + 1));
                    if (k == "a0") params.a0 = v;
                    else if (k == "v0") params.v0 = v;
                    else if (k == "corr_length") params.corr_length = v;
                    else if (k == "kappa") params.kappa = v;
                    else if (k == "gain") params.gain = v;
                    else if (k == "a_floor") params.a_floor = v;
                    else if (k == "peak_exponent") params.peak_exponent = v;
                    else throw PreconditionError("unknown env parameter '" + k + "'");
                }
            }
            continue;
        }
        if (line.rfind("x,", 0) == 0) continue;
        std::istringstream ls(line);
        std::string tok[4];
        for (auto& t : tok)
            if (!std::getline(ls, t, ',')) throw PreconditionError("malformed env row: " + line);
        xs.push_back(parse_double(tok[0]));
        env.a_.push_back(parse_double(tok[1]));
        env.v_.push_back(parse_double(tok[2]));
        env.s_.push_back(parse_double(tok[3]));
    }
    require(have_kind && have_seed && have_dx, "env file missing kind/seed/dx_env header");
    require(env.a_.size() >= 2, "env file has fewer than two rows");
    env.law_ = EnvLaw(kind, seed, params);
    for (std::size_t j = 0; j < xs.size(); ++j)
        if (xs[j] != env.node_x(j)) throw PreconditionError("env file x column does not match k_first/dx_env lattice");
    return env;
}

}  // namespace hjlab
