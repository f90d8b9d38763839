#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hjlab/commands.hpp"
#include "hjlab/config.hpp"
#include "hjlab/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Effective Hamiltonians of 1D viscous Hamilton-Jacobi equations in random media"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    int workers = 1;
    long long seed_override = -1;
    for (const auto& name : hjlab::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (default: [run] output)");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
        sub->add_option("--seed-override", seed_override, "replace env.seed")->check(CLI::NonNegativeNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    hjlab::RunConfig cfg;
    try {
        cfg = hjlab::load_config(config_path);
        if (seed_override >= 0) {
            cfg.env.seed = static_cast<std::uint64_t>(seed_override);
            cfg.entries["env.seed"] = std::to_string(seed_override);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hjlab::exit_code_for(e);
    }
    hjlab::CommandOptions opts;
    opts.out_dir = out_dir;
    opts.workers = workers;
    const int rc = hjlab::run_command(command, cfg, opts, std::cerr);
    if (rc == 0) std::cerr << command << ": ok\n";
    return rc;
}
