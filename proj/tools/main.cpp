// Command-line front end: one pipeline per invocation.
//
//   singsys-cli <eigen|solve|second|certify> --config <path> [--out <dir>] [--seed <n>]
//
// Exit codes: 0 success, 1 usage/config error, 2 pipeline failure,
// 3 second solution not found.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "singsys/config.hpp"
#include "singsys/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"barrier-certified solver for a coupled singular diffusion system"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value run description")
            ->required();
        sub->add_option("--out", out_dir, "output directory (default: current)");
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_given = true; });
        return sub;
    };

    CLI::App* eigen = add_common(app.add_subcommand(
        "eigen", "principal eigenpairs of the two operators"));
    CLI::App* solve = add_common(app.add_subcommand(
        "solve", "full barrier pipeline with continuation and certificates"));
    CLI::App* second = add_common(app.add_subcommand(
        "second", "search for a second solution outside the hat rectangle"));
    CLI::App* certify = add_common(app.add_subcommand(
        "certify", "re-audit a stored solve against fresh certificates"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    singsys::RunConfig cfg;
    try {
        cfg = singsys::load_config(config_path);
    } catch (const singsys::config_error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    cfg.output_dir = out_dir;
    if (seed_given) cfg.seed = seed;

    try {
        if (eigen->parsed()) return singsys::cmd_eigen(cfg);
        if (solve->parsed()) return singsys::cmd_solve(cfg);
        if (second->parsed()) return singsys::cmd_second(cfg);
        if (certify->parsed()) return singsys::cmd_certify(cfg);
    } catch (const std::exception& ex) {
        std::cerr << "unhandled failure: " << ex.what() << "\n";
        return 2;
    }
    return 1;
}
