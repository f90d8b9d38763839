#include "hjlab/config.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "hjlab/errors.hpp"
#include "hjlab/numfmt.hpp"

namespace hjlab {

namespace {

std::string trimmed(const std::string& s) { return boost::algorithm::trim_copy(s); }

Interval parse_interval(const std::string& key, const std::string& text) {
    const auto v = parse_list(text);
    if (v.size() != 2 || !(v[0] < v[1])) throw PreconditionError(key + " must be 'lo, hi' with lo < hi");
    return {v[0], v[1]};
}

std::vector<Branch> parse_branches(const std::string& key, const std::string& text) {
    std::vector<Branch> out;
    for (double b : parse_list(text)) {
        if (b != 1.0 && b != 2.0) throw PreconditionError(key + " entries must be 1 or 2");
        out.push_back(parse_branch(static_cast<int>(b)));
    }
    if (out.empty()) throw PreconditionError(key + " is empty");
    return out;
}

GFamily parse_family(const std::string& name) {
    if (name == "power") return GFamily::Power;
    if (name == "asym-power") return GFamily::AsymPower;
    if (name == "log-quasiconvex") return GFamily::LogQuasiconvex;
    if (name == "tabulated") return GFamily::Tabulated;
    throw PreconditionError("unknown hamiltonian family '" + name + "'");
}

int to_int(const std::string& key, const std::string& v) {
    const long long i = parse_int(v);
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
        throw PreconditionError(key + " is out of range");
    return static_cast<int>(i);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

std::map<std::string, Setter> setters(const std::filesystem::path& base) {
    std::map<std::string, Setter> s;
    s["run.output"] = [](RunConfig& c, const std::string& v) { c.output_dir = v; };

    s["env.kind"] = [](RunConfig& c, const std::string& v) { c.env.kind = parse_env_kind(v); };
    s["env.seed"] = [](RunConfig& c, const std::string& v) {
        const long long i = parse_int(v);
        if (i < 0) throw PreconditionError("env.seed must be non-negative");
        c.env.seed = static_cast<std::uint64_t>(i);
    };
    s["env.window"] = [](RunConfig& c, const std::string& v) { c.env.window = parse_interval("env.window", v); };
    s["env.dx"] = [](RunConfig& c, const std::string& v) { c.env.dx = parse_double(v); };
    s["env.a0"] = [](RunConfig& c, const std::string& v) { c.env.params.a0 = parse_double(v); };
    s["env.v0"] = [](RunConfig& c, const std::string& v) { c.env.params.v0 = parse_double(v); };
    s["env.corr_length"] = [](RunConfig& c, const std::string& v) { c.env.params.corr_length = parse_double(v); };
    s["env.kappa"] = [](RunConfig& c, const std::string& v) { c.env.params.kappa = parse_double(v); };
    s["env.gain"] = [](RunConfig& c, const std::string& v) { c.env.params.gain = parse_double(v); };
    s["env.a_floor"] = [](RunConfig& c, const std::string& v) { c.env.params.a_floor = parse_double(v); };
    s["env.peak_exponent"] = [](RunConfig& c, const std::string& v) { c.env.params.peak_exponent = parse_double(v); };

    s["hamiltonian.family"] = [](RunConfig& c, const std::string& v) { c.hamiltonian.family = parse_family(v); };
    s["hamiltonian.gamma"] = [](RunConfig& c, const std::string& v) { c.hamiltonian.gamma = parse_double(v); };
    s["hamiltonian.gamma_left"] = [](RunConfig& c, const std::string& v) { c.hamiltonian.gamma_left = parse_double(v); };
    s["hamiltonian.gamma_right"] = [](RunConfig& c, const std::string& v) {
        c.hamiltonian.gamma_right = parse_double(v);
    };
    s["hamiltonian.table_left"] = [base](RunConfig& c, const std::string& v) { c.hamiltonian.table_left = base / v; };
    s["hamiltonian.table_right"] = [base](RunConfig& c, const std::string& v) { c.hamiltonian.table_right = base / v; };
    s["hamiltonian.certificate"] = [](RunConfig& c, const std::string& v) {
        const auto x = parse_list(v);
        if (x.size() != 3) throw PreconditionError("hamiltonian.certificate must be 'gamma, c1, c2'");
        c.hamiltonian.certificate = GrowthCertificate{x[0], x[1], x[2]};
    };
    s["hamiltonian.growth_P"] = [](RunConfig& c, const std::string& v) { c.hamiltonian.growth_P = parse_double(v); };

    s["model.beta"] = [](RunConfig& c, const std::string& v) { c.beta = parse_double(v); };

    s["corrector.branch"] = [](RunConfig& c, const std::string& v) {
        c.corrector.branch = parse_branch(to_int("corrector.branch", v));
    };
    s["corrector.lambda"] = [](RunConfig& c, const std::string& v) { c.corrector.lambda = parse_double(v); };
    s["corrector.region"] = [](RunConfig& c, const std::string& v) {
        c.corrector.region = parse_interval("corrector.region", v);
    };
    s["corrector.tol"] = [](RunConfig& c, const std::string& v) { c.corrector.tol = parse_double(v); };
    s["corrector.dx"] = [](RunConfig& c, const std::string& v) { c.corrector.dx = parse_double(v); };

    s["theta.branches"] = [](RunConfig& c, const std::string& v) {
        c.theta_curve.branches = parse_branches("theta.branches", v);
    };
    s["theta.lambdas"] = [](RunConfig& c, const std::string& v) { c.theta_curve.lambdas = parse_list(v); };
    s["theta.X"] = [](RunConfig& c, const std::string& v) { c.theta.X = parse_double(v); };
    s["theta.n_batches"] = [](RunConfig& c, const std::string& v) { c.theta.n_batches = to_int("theta.n_batches", v); };
    s["theta.dx"] = [](RunConfig& c, const std::string& v) { c.theta.dx = parse_double(v); };
    s["theta.cert_tol"] = [](RunConfig& c, const std::string& v) { c.theta.cert_tol = parse_double(v); };
    s["theta.cert_tol_floor"] = [](RunConfig& c, const std::string& v) { c.theta.cert_tol_floor = parse_double(v); };
    s["theta.max_burn_in"] = [](RunConfig& c, const std::string& v) { c.theta.max_burn_in = parse_double(v); };

    s["effective.thetas"] = [](RunConfig& c, const std::string& v) { c.effective.thetas = parse_list(v); };
    s["effective.tol"] = [](RunConfig& c, const std::string& v) { c.effective.tol = parse_double(v); };

    s["homogenize.thetas"] = [](RunConfig& c, const std::string& v) { c.homogenize.thetas = parse_list(v); };
    s["homogenize.epsilons"] = [](RunConfig& c, const std::string& v) { c.homogenize.epsilons = parse_list(v); };
    s["homogenize.dx"] = [](RunConfig& c, const std::string& v) { c.homogenize.sweep.dx = parse_double(v); };
    s["homogenize.M_scaled"] = [](RunConfig& c, const std::string& v) { c.homogenize.sweep.M_scaled = parse_double(v); };
    s["homogenize.cfl"] = [](RunConfig& c, const std::string& v) { c.homogenize.sweep.cfl = parse_double(v); };
    s["homogenize.tol"] = [](RunConfig& c, const std::string& v) { c.homogenize.tol = parse_double(v); };

    s["hill.h"] = [](RunConfig& c, const std::string& v) { c.hill.h = parse_list(v); };
    s["hill.C"] = [](RunConfig& c, const std::string& v) { c.hill.C = parse_list(v); };
    s["hill.singular_c"] = [](RunConfig& c, const std::string& v) { c.hill.singular_c = parse_list(v); };
    s["hill.max_doublings"] = [](RunConfig& c, const std::string& v) {
        c.hill.max_doublings = to_int("hill.max_doublings", v);
    };

    s["probe.target"] = [](RunConfig& c, const std::string& v) {
        if (v == "corrector") c.probe.target = ProbeSpec::Target::Corrector;
        else if (v == "glued") c.probe.target = ProbeSpec::Target::Glued;
        else throw PreconditionError("probe.target must be 'corrector' or 'glued'");
    };
    s["probe.kinds"] = [](RunConfig& c, const std::string& v) {
        c.probe.kinds.clear();
        std::istringstream is(v);
        std::string tok;
        while (std::getline(is, tok, ',')) c.probe.kinds.push_back(parse_probe_kind(trimmed(tok)));
        if (c.probe.kinds.empty()) throw PreconditionError("probe.kinds is empty");
    };
    s["probe.delta"] = [](RunConfig& c, const std::string& v) { c.probe.delta = parse_double(v); };
    s["probe.tol"] = [](RunConfig& c, const std::string& v) { c.probe.tol = parse_double(v); };
    s["probe.cert_tol"] = [](RunConfig& c, const std::string& v) { c.probe.cert_tol = parse_double(v); };
    s["probe.order"] = [](RunConfig& c, const std::string& v) { c.probe.order = parse_glue_order(v); };
    s["probe.hill_C"] = [](RunConfig& c, const std::string& v) { c.probe.hill_C = parse_double(v); };
    s["probe.hill_search"] = [](RunConfig& c, const std::string& v) {
        c.probe.hill_search = parse_interval("probe.hill_search", v);
    };
    return s;
}

void check_positive(double v, const std::string& key) {
    if (!(v > 0.0)) throw PreconditionError(key + " must be positive");
}

void validate(const RunConfig& c) {
    check_positive(c.beta, "model.beta");
    check_positive(c.env.dx, "env.dx");
    check_positive(c.corrector.tol, "corrector.tol");
    check_positive(c.corrector.dx, "corrector.dx");
    check_positive(c.theta.X, "theta.X");
    check_positive(c.theta.dx, "theta.dx");
    check_positive(c.theta.cert_tol, "theta.cert_tol");
    check_positive(c.effective.tol, "effective.tol");
    check_positive(c.homogenize.tol, "homogenize.tol");
    check_positive(c.homogenize.sweep.dx, "homogenize.dx");
    check_positive(c.homogenize.sweep.M_scaled, "homogenize.M_scaled");
    check_positive(c.probe.tol, "probe.tol");
    check_positive(c.probe.cert_tol, "probe.cert_tol");
    if (c.theta.n_batches < 10) throw PreconditionError("theta.n_batches must be at least 10");
    if (!(c.homogenize.sweep.cfl > 0.0 && c.homogenize.sweep.cfl <= 0.9))
        throw PreconditionError("homogenize.cfl must lie in (0, 0.9]");
    if (c.homogenize.epsilons.empty()) throw PreconditionError("homogenize.epsilons is empty");
    for (std::size_t i = 0; i < c.homogenize.epsilons.size(); ++i) {
        if (!(c.homogenize.epsilons[i] > 0.0)) throw PreconditionError("homogenize.epsilons must be positive");
        if (i > 0 && !(c.homogenize.epsilons[i] < c.homogenize.epsilons[i - 1]))
            throw PreconditionError("homogenize.epsilons must be strictly decreasing");
    }
    if (!(c.probe.delta > 0.0 && c.probe.delta < 1.0)) throw PreconditionError("probe.delta must lie in (0, 1)");
    for (double h : c.hill.h)
        if (!(h > 0.0 && h < 1.0)) throw PreconditionError("hill.h entries must lie in (0, 1)");
    for (double C : c.hill.C) check_positive(C, "hill.C entries");
    for (double x : c.hill.singular_c)
        if (!(x > 0.0 && x < 1.0)) throw PreconditionError("hill.singular_c entries must lie in (0, 1)");
    if (c.hill.max_doublings < 0 || c.hill.max_doublings > 30)
        throw PreconditionError("hill.max_doublings must lie in [0, 30]");

    const double floor = c.beta * c.env.law().potential_range().hi;
    auto check_level = [&](double lam, const std::string& key) {
        if (!(lam >= floor)) {
            std::ostringstream msg;
            msg << key << " = " << lam << " lies below beta sup V = " << floor;
            throw PreconditionError(msg.str());
        }
    };
    check_level(c.corrector.lambda, "corrector.lambda");
    for (double l : c.theta_curve.lambdas) check_level(l, "theta.lambdas entry");
    (void)c.hamiltonian.build();
}

}  // namespace

EnvLaw EnvSpec::law() const { return EnvLaw(kind, seed.value_or(0), params); }

EnvRealization EnvSpec::generate() const { return generate(window); }

EnvRealization EnvSpec::generate(Interval w) const {
    require(seed.has_value(), "env.seed is required");
    return generate_env(kind, *seed, w, dx, params);
}

Hamiltonian HamiltonianSpec::build() const {
    Hamiltonian G = [&] {
        switch (family) {
            case GFamily::Power: return Hamiltonian::power(gamma);
            case GFamily::AsymPower: return Hamiltonian::asym_power(gamma_left, gamma_right);
            case GFamily::LogQuasiconvex: return Hamiltonian::log_quasiconvex();
            case GFamily::Tabulated: {
                auto read = [](const std::filesystem::path& p, const char* side) {
                    if (p.empty()) throw PreconditionError(std::string("hamiltonian.table_") + side + " is required");
                    std::ifstream is(p);
                    if (!is) throw PreconditionError("cannot open G table " + p.string());
                    return read_branch_table(is);
                };
                return Hamiltonian::tabulated(read(table_left, "left"), read(table_right, "right"));
            }
        }
        throw PreconditionError("unknown hamiltonian family");
    }();
    if (certificate) G.set_certificate(*certificate);
    return G;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        const std::string t = trimmed(tok);
        if (t.empty()) throw PreconditionError("empty entry in list '" + text + "'");
        out.push_back(parse_double(t));
    }
    return out;
}

RunConfig parse_config(std::istream& is, const std::filesystem::path& base_dir) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw PreconditionError(std::string("config parse error: ") + e.what());
    }
    const auto table = setters(base_dir);
    RunConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw PreconditionError("config key '" + section + "' lies outside any section");
        for (const auto& [key, node] : body) {
            const std::string full = section + "." + key;
            const auto it = table.find(full);
            if (it == table.end()) throw PreconditionError("unknown config key '" + full + "'");
            const std::string value = trimmed(node.data());
            it->second(cfg, value);
            cfg.entries[full] = value;
        }
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw PreconditionError("cannot open config " + path.string());
    return parse_config(is, path.parent_path());
}

std::optional<GrowthCertificate> effective_certificate(const HamiltonianSpec& spec) {
    if (spec.certificate) return spec.certificate;
    if (spec.family == GFamily::Power) return GrowthCertificate{spec.gamma, 1.0, std::max(1.0, spec.gamma)};
    return std::nullopt;
}

void validate_for_command(const RunConfig& cfg, const std::string& command) {
    if (!cfg.env.seed) throw PreconditionError("env.seed is required");
    if (command == "homogenize") {
        const auto cert = effective_certificate(cfg.hamiltonian);
        if (!cert) throw PreconditionError("homogenize needs hamiltonian.certificate for this family");
        const GrowthReport r = validate_growth(cfg.hamiltonian.build(), *cert, cfg.hamiltonian.growth_P);
        if (!r.ok()) {
            std::ostringstream msg;
            msg << "growth certificate fails on [-P, P]: lower " << (r.lower_ok ? "ok" : "fail") << ", upper "
                << (r.upper_ok ? "ok" : "fail") << ", lipschitz " << (r.lipschitz_ok ? "ok" : "fail");
            throw PreconditionError(msg.str());
        }
    }
}

}  // namespace hjlab
