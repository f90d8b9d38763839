#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hjlab {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

enum class EnvKind { IidInterp, GaussSquash, Periodic, CoupledSingular, Constant };

std::string_view to_string(EnvKind kind);
EnvKind parse_env_kind(std::string_view name);

/// Generator parameters. Each kind reads only the fields it needs.
struct EnvParams {
    double a0 = 1.0;            // constant diffusion (iid-interp, constant)
    double v0 = 0.0;            // constant potential (constant)
    double corr_length = 1.0;   // kernel half-support (gauss-squash)
    double kappa = 0.2;         // diffusion floor (gauss-squash)
    double gain = 2.0;          // logistic squashing gain (gauss-squash)
    double a_floor = 1e-4;      // diffusion floor (coupled-singular)
    double peak_exponent = 4.0; // W = 1 - (1-U)^q peak shaping (coupled-singular)
};

/// Pointwise law of a realization: (a, V) as a deterministic function of the
/// absolute coordinate and the seed. Stationarity holds under every real shift
/// because each kind carries a uniform random phase drawn from the seed.
class EnvLaw {
public:
    EnvLaw(EnvKind kind, std::uint64_t seed, EnvParams params);

    /// (a, V) at absolute coordinate x.
    std::pair<double, double> at(double x) const;

    EnvKind kind() const { return kind_; }
    std::uint64_t seed() const { return seed_; }
    const EnvParams& params() const { return params_; }

    /// Bounds of the potential's law: [0,1] for every kind except constant,
    /// whose range is the single value v0.
    Interval potential_range() const;

    /// False for the constant control, which violates inf V = 0, sup V = 1.
    bool full_range() const { return kind_ != EnvKind::Constant; }

    double phase() const { return phase_; }

private:
    double iid_value(std::int64_t k, std::uint64_t stream) const;
    double gauss_field(double x, std::uint64_t stream) const;

    EnvKind kind_;
    std::uint64_t seed_;
    EnvParams params_;
    double phase_ = 0.0;
    double kernel_norm_ = 1.0;
};

/// One sampled realization of (a, V) on a finite window of a fixed lattice.
///
/// Node j sits at local coordinate x_j = (k_first + j) * dx and carries the
/// law evaluated at absolute coordinate x_j + offset, where
/// offset = shift_steps * dx + shift_frac. Lattice-aligned shifts only change
/// shift_steps, so shifted node values are bit-identical to the originals.
class EnvRealization {
public:
    EnvRealization() = default;

    const EnvLaw& law() const { return law_; }
    EnvKind kind() const { return law_.kind(); }
    std::uint64_t seed() const { return law_.seed(); }
    double dx() const { return dx_; }
    std::int64_t k_first() const { return k_first_; }
    std::int64_t shift_steps() const { return shift_steps_; }
    double shift_frac() const { return shift_frac_; }
    std::size_t size() const { return a_.size(); }

    double x_min() const { return node_x(0); }
    double x_max() const { return node_x(size() - 1); }
    Interval window() const { return {x_min(), x_max()}; }
    double node_x(std::size_t j) const { return static_cast<double>(k_first_ + static_cast<std::int64_t>(j)) * dx_; }

    const std::vector<double>& a_vals() const { return a_; }
    const std::vector<double>& v_vals() const { return v_; }
    const std::vector<double>& s_table() const { return s_; }

    Interval potential_range() const { return law_.potential_range(); }
    double a_max() const;
    double v_min_observed() const;
    double v_max_observed() const;

    /// Linear interpolation of (a, V); exact stored sample at nodes.
    std::pair<double, double> sample(double x) const;
    double a_at(double x) const { return sample(x).first; }
    double v_at(double x) const { return sample(x).second; }

    /// Scaled coordinate s(x) - s(x_min) (trapezoid of 1/a).
    double s_at(double x) const;

    friend EnvRealization generate_env(EnvKind, std::uint64_t, Interval, double, const EnvParams&);
    friend EnvRealization shift(const EnvRealization&, double);
    friend EnvRealization read_env(std::istream&);

private:
    // Fractional node position; snaps to the nearest node within 1e-9 cells.
    std::pair<std::size_t, double> locate(double x) const;
    void fill_from_law();
    void build_s_table();

    EnvLaw law_{EnvKind::Constant, 0, EnvParams{}};
    double dx_ = 0.0;
    std::int64_t k_first_ = 0;
    std::int64_t shift_steps_ = 0;
    double shift_frac_ = 0.0;
    std::vector<double> a_, v_, s_;
};

/// Window endpoints are rounded outward to multiples of dx_env.
EnvRealization generate_env(EnvKind kind, std::uint64_t seed, Interval window, double dx_env,
                            const EnvParams& params = {});

std::pair<double, double> sample(const EnvRealization& env, double x);

/// Trapezoid value of the integral of 1/a over [x1, x2].
double s_between(const EnvRealization& env, double x1, double x2);

/// Realization of the same law viewed at offset z: sample(shift(env,z), x) == sample(env, x+z).
EnvRealization shift(const EnvRealization& env, double z);

struct HillWitness {
    double L1 = 0.0;
    double L2 = 0.0;
    double scaled_length = 0.0;
    double v_min_on_interval = 0.0;
};

/// First maximal node streak with V >= h whose scaled length reaches C.
/// An empty result means "not found in this window", not a disproof.
std::optional<HillWitness> find_hill(const EnvRealization& env, double h, double C);

/// Same scan as find_hill(generate_env(law, window, dx), h, C) with node values
/// streamed from the law, so arbitrarily long windows need no storage.
std::optional<HillWitness> find_hill(const EnvLaw& law, Interval window, double dx, double h, double C);

struct HillSearch {
    std::optional<HillWitness> witness;
    Interval window{};  // last window scanned
    int doublings = 0;
};

/// Scans [center - w, center + w] for w = half_width * 2^k, k = 0..max_doublings,
/// stopping at the first window that contains a witness.
HillSearch find_hill_doubling(const EnvLaw& law, double center, double half_width, double dx, double h, double C,
                              int max_doublings);

/// First node z with a(z) <= c and V(z) >= 1 - c.
std::optional<double> check_singular_hill(const EnvRealization& env, double c);

/// Columnar text format: '# key value' header lines then 'x,a,V,s' rows.
/// Floats are written in shortest round-trip decimal.
void write_env(std::ostream& os, const EnvRealization& env);
EnvRealization read_env(std::istream& is);

}  // namespace hjlab
