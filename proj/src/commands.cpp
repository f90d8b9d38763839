#include "hjlab/commands.hpp"

#include <boost/version.hpp>
#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "hjlab/errors.hpp"
#include "hjlab/numfmt.hpp"
#include "hjlab/parallel.hpp"
#include "json.hpp"

#ifndef HJLAB_VERSION
#define HJLAB_VERSION "0.0.0"
#endif

namespace hjlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json interval_json(Interval iv) { return json::array({iv.lo, iv.hi}); }

json hill_json(const HillWitness& w) {
    return {{"L1", w.L1}, {"L2", w.L2}, {"scaled_length", w.scaled_length}, {"v_min_on_interval", w.v_min_on_interval}};
}

json theta_json(const ThetaEstimate& t) {
    return {{"branch", static_cast<int>(t.branch)}, {"lambda", t.lambda},         {"mean", t.mean},
            {"ci_halfwidth", t.ci_halfwidth},       {"cert_bound", t.cert_bound}, {"burn_in", t.burn_in}};
}

json resolved_config(const RunConfig& c) {
    json env = {{"kind", std::string(to_string(c.env.kind))},
                {"seed", c.env.seed ? json(*c.env.seed) : json(nullptr)},
                {"window", interval_json(c.env.window)},
                {"dx", c.env.dx},
                {"a0", c.env.params.a0},
                {"v0", c.env.params.v0},
                {"corr_length", c.env.params.corr_length},
                {"kappa", c.env.params.kappa},
                {"gain", c.env.params.gain},
                {"a_floor", c.env.params.a_floor},
                {"peak_exponent", c.env.params.peak_exponent}};
    json ham = {{"name", c.hamiltonian.build().name()},
                {"gamma", c.hamiltonian.gamma},
                {"gamma_left", c.hamiltonian.gamma_left},
                {"gamma_right", c.hamiltonian.gamma_right},
                {"table_left", c.hamiltonian.table_left.string()},
                {"table_right", c.hamiltonian.table_right.string()},
                {"growth_P", c.hamiltonian.growth_P}};
    if (c.hamiltonian.certificate)
        ham["certificate"] = {c.hamiltonian.certificate->gamma, c.hamiltonian.certificate->c1,
                              c.hamiltonian.certificate->c2};
    json branches = json::array();
    for (Branch b : c.theta_curve.branches) branches.push_back(static_cast<int>(b));
    json kinds = json::array();
    for (ProbeKind k : c.probe.kinds) kinds.push_back(to_string(k));
    return {
        {"env", env},
        {"hamiltonian", ham},
        {"model", {{"beta", c.beta}}},
        {"corrector",
         {{"branch", static_cast<int>(c.corrector.branch)},
          {"lambda", c.corrector.lambda},
          {"region", interval_json(c.corrector.region)},
          {"tol", c.corrector.tol},
          {"dx", c.corrector.dx}}},
        {"theta",
         {{"branches", branches},
          {"lambdas", c.theta_curve.lambdas},
          {"X", c.theta.X},
          {"n_batches", c.theta.n_batches},
          {"dx", c.theta.dx},
          {"cert_tol", c.theta.cert_tol},
          {"cert_tol_floor", c.theta.cert_tol_floor},
          {"max_burn_in", c.theta.max_burn_in}}},
        {"effective", {{"thetas", c.effective.thetas}, {"tol", c.effective.tol}}},
        {"homogenize",
         {{"thetas", c.homogenize.thetas},
          {"epsilons", c.homogenize.epsilons},
          {"dx", c.homogenize.sweep.dx},
          {"M_scaled", c.homogenize.sweep.M_scaled},
          {"cfl", c.homogenize.sweep.cfl},
          {"tol", c.homogenize.tol}}},
        {"hill",
         {{"h", c.hill.h}, {"C", c.hill.C}, {"singular_c", c.hill.singular_c}, {"max_doublings", c.hill.max_doublings}}},
        {"probe",
         {{"target", c.probe.target == ProbeSpec::Target::Glued ? "glued" : "corrector"},
          {"kinds", kinds},
          {"delta", c.probe.delta},
          {"tol", c.probe.tol},
          {"cert_tol", c.probe.cert_tol},
          {"order", to_string(c.probe.order)},
          {"hill_C", c.probe.hill_C},
          {"hill_search", interval_json(c.probe.hill_search)}}},
    };
}

struct Context {
    const RunConfig& cfg;
    fs::path out;
    int workers;
    std::ostream& log;
    json summary = json::object();
    std::vector<std::string> outputs;
    int status = 0;

    std::ofstream open(const std::string& name) {
        std::ofstream os(out / name, std::ios::binary);
        if (!os) throw PreconditionError("cannot write " + (out / name).string());
        outputs.push_back(name);
        return os;
    }
};

// ---------------------------------------------------------------------------

void cmd_gen_env(Context& ctx) {
    const EnvRealization env = ctx.cfg.env.generate();
    auto os = ctx.open("env.csv");
    write_env(os, env);
    ctx.summary = {{"nodes", env.size()},
                   {"window", interval_json(env.window())},
                   {"a_max", env.a_max()},
                   {"v_min_observed", env.v_min_observed()},
                   {"v_max_observed", env.v_max_observed()},
                   {"full_range", env.law().full_range()}};
    if (!env.law().full_range())
        ctx.summary["flag"] = "constant kind violates inf V = 0 and sup V = 1; analytic control only";
}

void cmd_corrector(Context& ctx) {
    const auto& c = ctx.cfg;
    const EnvRealization env = c.env.generate();
    const Hamiltonian G = c.hamiltonian.build();
    const CorrectorProfile p =
        corrector_profile(env, G, c.beta, c.corrector.lambda, c.corrector.branch, c.corrector.region, c.corrector.tol,
                          c.corrector.dx);
    auto os = ctx.open("corrector.csv");
    write_profile(os, p);
    ctx.summary = {{"bracket", interval_json(p.bracket)}, {"burn_in", p.burn_in},     {"burn_in_s", p.burn_in_s},
                   {"cert_bound", p.cert_bound},           {"merge_gap", p.merge_gap}, {"modulus", p.modulus},
                   {"max_residual", max_residual(env, G, p)}};
}

void cmd_theta_curve(Context& ctx) {
    const auto& c = ctx.cfg;
    const EnvRealization env = c.env.generate();
    const Hamiltonian G = c.hamiltonian.build();
    std::vector<std::pair<Branch, double>> items;
    for (Branch b : c.theta_curve.branches)
        for (double l : c.theta_curve.lambdas) items.emplace_back(b, l);
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    auto est = parallel_map(items, ctx.workers, [&](const std::pair<Branch, double>& it) {
        return estimate_theta(env, G, c.beta, it.second, it.first, c.theta);
    });
    auto os = ctx.open("theta_curve.csv");
    os << "branch,lambda,theta,ci_halfwidth,bracket_lo,bracket_hi,cert_bound,burn_in\n";
    json rows = json::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
        const ThetaEstimate& t = est[i];
        const Interval br = branch_bracket(G, t.branch, t.lambda, c.beta, env.potential_range());
        os << static_cast<int>(t.branch) << ',' << format_double(t.lambda) << ',' << format_double(t.mean) << ','
           << format_double(t.ci_halfwidth) << ',' << format_double(br.lo) << ',' << format_double(br.hi) << ','
           << format_double(t.cert_bound) << ',' << format_double(t.burn_in) << '\n';
        rows.push_back(theta_json(t));
    }
    ctx.summary = {{"estimates", rows}};
}

void cmd_effective(Context& ctx) {
    const auto& c = ctx.cfg;
    const EnvRealization env = c.env.generate();
    const Hamiltonian G = c.hamiltonian.build();
    const EffectiveH H = build_effective_H(env, G, c.beta, c.effective.thetas, c.effective.tol, c.theta, ctx.workers);
    auto os = ctx.open("effective.csv");
    write_effective_csv(os, H, c.effective.thetas);
    ctx.summary = {{"flat_value", H.floor},
                   {"theta1_beta", theta_json(H.theta1_beta)},
                   {"theta2_beta", theta_json(H.theta2_beta)},
                   {"left_entries", H.left.size()},
                   {"right_entries", H.right.size()}};
}

void cmd_homogenize(Context& ctx) {
    const auto& c = ctx.cfg;
    const EnvRealization env = c.env.generate();
    const Hamiltonian G = c.hamiltonian.build();
    const double floor = level_floor(env, c.beta);
    const std::vector<Branch> ends{Branch::Left, Branch::Right};
    const auto endpoints =
        parallel_map(ends, ctx.workers, [&](Branch b) { return estimate_theta(env, G, c.beta, floor, b, c.theta); });

    std::vector<double> thetas = c.homogenize.thetas;
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

    struct Reference {
        double value = 0.0;
        json info;
    };
    auto refs = parallel_map(thetas, ctx.workers, [&](double theta) {
        Reference r;
        if (theta > endpoints[0].mean && theta < endpoints[1].mean) {
            r.value = floor;
            r.info = {{"piece", "flat"}};
            return r;
        }
        const Branch b = theta >= endpoints[1].mean ? Branch::Right : Branch::Left;
        try {
            const Inversion inv = invert_theta(env, G, c.beta, theta, b, c.homogenize.tol, c.theta);
            r.value = inv.lambda;
            r.info = {{"piece", b == Branch::Right ? "right" : "left"},
                      {"lambda_lo", inv.lambda_lo},
                      {"lambda_hi", inv.lambda_hi},
                      {"theta_at_lambda", theta_json(inv.at)}};
        } catch (const FlatPieceError&) {
            r.value = floor;
            r.info = {{"piece", "flat"}};
        }
        return r;
    });

    SweepSettings s = c.homogenize.sweep;
    s.workers = ctx.workers;
    std::vector<SweepResult> results;
    json per_theta = json::array();
    const double M_used = s.M_scaled / c.homogenize.epsilons.back();
    const auto hill = find_hill(c.env.generate({-M_used, M_used}), 0.9, 5.0);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        results.push_back(homogenize_sweep(env, G, c.beta, thetas[i], c.homogenize.epsilons, s, refs[i].value));
        const SweepResult& r = results.back();
        json item = refs[i].info;
        item["theta"] = thetas[i];
        item["reference"] = r.reference;
        item["values"] = r.values;
        item["domain_sensitivity"] = r.domain_sensitivity;
        item["excursions"] = r.excursions;
        per_theta.push_back(item);
    }
    auto os = ctx.open("homogenize.csv");
    write_sweep_csv(os, results);
    ctx.summary = {{"flat_value", floor},
                   {"theta1_beta", theta_json(endpoints[0])},
                   {"theta2_beta", theta_json(endpoints[1])},
                   {"half_width_smallest_epsilon", M_used},
                   {"hill_0.9_5", hill ? hill_json(*hill) : json("none")},
                   {"sweeps", per_theta}};
}

void cmd_hill_check(Context& ctx) {
    const auto& c = ctx.cfg;
    auto os = ctx.open("hill_check.csv");
    os << "check,h,C,c,status,L1,L2,scaled_length,v_min_on_interval,z,window_lo,window_hi\n";
    const double mid = 0.5 * (c.env.window.lo + c.env.window.hi);
    const double half = 0.5 * c.env.window.width();
    json rows = json::array();
    std::vector<std::pair<double, double>> pairs;
    for (double h : c.hill.h)
        for (double C : c.hill.C) pairs.emplace_back(h, C);
    auto found = parallel_map(pairs, ctx.workers, [&](const std::pair<double, double>& hc) {
        const HillSearch r = find_hill_doubling(c.env.law(), mid, half, c.env.dx, hc.first, hc.second,
                                                c.hill.max_doublings);
        return std::make_pair(r.witness, r.window);
    });
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [w, win] = found[i];
        os << "hill," << format_double(pairs[i].first) << ',' << format_double(pairs[i].second) << ",,"
           << (w ? "found" : "none") << ',';
        if (w)
            os << format_double(w->L1) << ',' << format_double(w->L2) << ',' << format_double(w->scaled_length) << ','
               << format_double(w->v_min_on_interval);
        else
            os << ",,,";
        os << ",," << format_double(win.lo) << ',' << format_double(win.hi) << '\n';
        rows.push_back({{"h", pairs[i].first},
                        {"C", pairs[i].second},
                        {"witness", w ? hill_json(*w) : json("none")},
                        {"window", interval_json(win)}});
    }
    if (!c.hill.singular_c.empty()) {
        const EnvRealization env = c.env.generate();
        for (double cc : c.hill.singular_c) {
            const auto z = check_singular_hill(env, cc);
            os << "singular,,," << format_double(cc) << ',' << (z ? "found" : "none") << ",,,,,"
               << (z ? format_double(*z) : "") << ',' << format_double(env.x_min()) << ',' << format_double(env.x_max())
               << '\n';
            rows.push_back({{"c", cc}, {"z", z ? json(*z) : json("none")}});
        }
    }
    ctx.summary = {{"checks", rows}};
}

void cmd_probe(Context& ctx) {
    const auto& c = ctx.cfg;
    const EnvRealization env = c.env.generate();
    const Hamiltonian G = c.hamiltonian.build();
    std::vector<ProbeReport> reports;
    if (c.probe.target == ProbeSpec::Target::Corrector) {
        const CorrectorProfile p =
            corrector_profile(env, G, c.beta, c.corrector.lambda, c.corrector.branch, c.corrector.region,
                              c.corrector.tol, c.corrector.dx);
        for (ProbeKind k : c.probe.kinds) reports.push_back(probe_corrector(env, G, p, c.probe.delta, k, c.probe.tol));
        ctx.summary["cert_bound"] = p.cert_bound;
    } else {
        const double h = 1.0 - c.probe.delta / c.beta;
        if (!(h > 0.0 && h < 1.0)) throw PreconditionError("glued probe needs 0 < delta < beta");
        Interval search = c.probe.hill_search;
        if (!(search.width() > 0.0)) {
            const double q = 0.25 * c.env.window.width();
            search = {c.env.window.lo + q, c.env.window.hi - q};
        }
        const auto hill = find_hill(c.env.generate(search), h, c.probe.hill_C);
        if (!hill) {
            std::ostringstream msg;
            msg << "no hill with V >= " << h << " and s-length >= " << c.probe.hill_C << " in [" << search.lo << ", "
                << search.hi << "]";
            throw PreconditionError(msg.str());
        }
        const GluedProfile gp =
            build_glued_profile(env, G, c.beta, c.probe.delta, *hill, c.probe.order, c.probe.cert_tol, c.corrector.dx);
        for (ProbeKind k : c.probe.kinds) reports.push_back(probe_glued(env, G, gp, k, c.probe.tol));
        ctx.summary["hill"] = hill_json(*hill);
        ctx.summary["z1"] = gp.z1;
        ctx.summary["z2"] = gp.z2;
        ctx.summary["residual_band"] = interval_json(gp.residual_band);
        ctx.summary["band_within_tol"] = gp.band_within(c.probe.tol);
        ctx.summary["bridge_max_G"] = gp.bridge_max_G;
        ctx.summary["bridge_slope"] = interval_json(gp.bridge_slope);
        ctx.summary["budget_met"] = gp.budget_met;
    }
    auto os = ctx.open("probe.csv");
    write_probe_csv(os, reports);
    json rows = json::array();
    for (const auto& r : reports) {
        rows.push_back({{"label", r.label},
                        {"kind", to_string(r.kind)},
                        {"drift", r.drift},
                        {"min_residual", r.min_residual},
                        {"max_residual", r.max_residual},
                        {"pass", r.pass}});
        if (!r.pass) ctx.status = 1;
    }
    ctx.summary["reports"] = rows;
}

using Handler = void (*)(Context&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h{
        {"gen-env", cmd_gen_env},     {"corrector", cmd_corrector},   {"theta-curve", cmd_theta_curve},
        {"effective", cmd_effective}, {"homogenize", cmd_homogenize}, {"hill-check", cmd_hill_check},
        {"probe", cmd_probe},
    };
    return h;
}

std::string file_stem(const std::string& command) {
    std::string s = command;
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"gen-env",    "corrector",  "theta-curve", "effective",
                                                "homogenize", "hill-check", "probe"};
    return names;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const PreconditionError*>(&e)) return 2;
    return 1;
}

int run_command(const std::string& command, const RunConfig& cfg, const CommandOptions& opts, std::ostream& log) {
    const auto it = handlers().find(command);
    if (it == handlers().end()) {
        log << "error: unknown command '" << command << "'\n";
        return 2;
    }
    const fs::path out = opts.out_dir.empty() ? fs::path(cfg.output_dir) : opts.out_dir;
    const auto t0 = std::chrono::steady_clock::now();
    Context ctx{cfg, out, std::max(1, opts.workers), log, json::object(), {}, 0};
    std::string error;
    try {
        validate_for_command(cfg, command);
        fs::create_directories(out);
        it->second(ctx);
    } catch (const std::exception& e) {
        ctx.status = exit_code_for(e);
        error = e.what();
        log << "error: " << error << '\n';
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::error_code ec;
    if (!fs::is_directory(out, ec)) return ctx.status;
    json meta = {{"command", command},
                 {"version", HJLAB_VERSION},
                 {"compiler", __VERSION__},
                 {"boost", BOOST_LIB_VERSION},
                 {"workers", ctx.workers},
                 {"wall_time_s", wall},
                 {"exit_code", ctx.status},
                 {"outputs", ctx.outputs},
                 {"config", resolved_config(cfg)},
                 {"config_as_read", cfg.entries},
                 {"summary", ctx.summary}};
    if (!error.empty()) meta["error"] = error;
    std::ofstream js(out / (file_stem(command) + ".json"));
    js << meta.dump(2) << '\n';
    return ctx.status;
}

}  // namespace hjlab
