#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hjlab/effective.hpp"
#include "hjlab/environment.hpp"
#include "hjlab/gluing.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/pde.hpp"

namespace hjlab {

struct EnvSpec {
    EnvKind kind = EnvKind::IidInterp;
    std::optional<std::uint64_t> seed;
    Interval window{-100.0, 100.0};
    double dx = 0.01;
    EnvParams params;

    EnvLaw law() const;
    EnvRealization generate() const;
    EnvRealization generate(Interval w) const;
};

struct HamiltonianSpec {
    GFamily family = GFamily::Power;
    double gamma = 2.0;
    double gamma_left = 2.0;
    double gamma_right = 2.0;
    std::filesystem::path table_left, table_right;
    std::optional<GrowthCertificate> certificate;
    double growth_P = 10.0;

    Hamiltonian build() const;
};

struct CorrectorSpec {
    Branch branch = Branch::Right;
    double lambda = 2.0;
    Interval region{0.0, 10.0};
    double tol = 1e-6;
    double dx = 0.01;
};

struct ThetaCurveSpec {
    std::vector<Branch> branches{Branch::Right};
    std::vector<double> lambdas{2.0};
};

struct EffectiveSpec {
    std::vector<double> thetas{-2.0, -1.5, 1.5, 2.0};
    double tol = 0.01;
};

struct HomogenizeSpec {
    std::vector<double> thetas{0.0};
    std::vector<double> epsilons{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    SweepSettings sweep;
    double tol = 0.01;  // inversion tolerance for the reference value
};

struct HillSpec {
    std::vector<double> h{0.5};
    std::vector<double> C{2.0};
    std::vector<double> singular_c;
    int max_doublings = 0;
};

struct ProbeSpec {
    enum class Target { Corrector, Glued };
    Target target = Target::Corrector;
    std::vector<ProbeKind> kinds{ProbeKind::Sub, ProbeKind::Super};
    double delta = 0.25;
    double tol = 0.1;
    double cert_tol = 1e-3;  // corrector certificate for the lambda = beta glued pieces
    GlueOrder order = GlueOrder::TwoToOne;
    double hill_C = 22.0;
    Interval hill_search{};  // empty: search the whole window
};

/// Validated run configuration. Sections: [run], [env], [hamiltonian],
/// [model], [corrector], [theta], [effective], [homogenize], [hill], [probe].
struct RunConfig {
    std::string output_dir = "out";
    EnvSpec env;
    HamiltonianSpec hamiltonian;
    double beta = 1.0;
    CorrectorSpec corrector;
    ThetaSettings theta;
    ThetaCurveSpec theta_curve;
    EffectiveSpec effective;
    HomogenizeSpec homogenize;
    HillSpec hill;
    ProbeSpec probe;

    /// Every key as read, after overrides; used for the metadata echo.
    std::map<std::string, std::string> entries;
};

/// Parses INI text. Unknown sections or keys, malformed numbers, beta <= 0
/// and levels below beta sup V raise PreconditionError.
RunConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Validation that needs the command: a seed for every command, and the
/// growth certificate when homogenizing.
void validate_for_command(const RunConfig& cfg, const std::string& command);

/// Certificate in force for homogenize: the configured one, or the family
/// default when the family has one.
std::optional<GrowthCertificate> effective_certificate(const HamiltonianSpec& spec);

std::vector<double> parse_list(const std::string& text);

}  // namespace hjlab
