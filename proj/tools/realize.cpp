#include "realize/cli/commands.hpp"
#include "realize/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

using realize::cli::Command;

int main(int argc, char** argv) {
    CLI::App app{"Exact trajectory realizability and control synthesis for affine systems"};
    app.require_subcommand(1);
    app.fallthrough();

    realize::cli::RunManifest m;
    std::vector<std::string> sets;
    std::optional<double> step;
    app.add_option("--config", m.config_path, "System and problem config file");
    app.add_option("--out", m.output_dir, "Directory for CSV output (created if absent)");
    app.add_option("--seed", m.seed, "Seed for randomized structural checks");
    app.add_option("--step", step, "Time step; overrides [time] steps");
    app.add_option("--tol-constraint", m.tol_constraint, "Constraint residual tolerance");
    app.add_option("--tol-initial", m.tol_initial, "Initial state tolerance");
    app.add_option("--tol-rank", m.tol_rank, "Relative rank tolerance");
    app.add_option("--set", sets, "Config override section.key=value (repeatable)");
    app.add_flag("--force", m.force, "Synthesize even when the trajectory is not realizable");
    app.add_flag("--verify", m.verify, "Simulate the control and add verification columns");

    const std::pair<const char*, Command> commands[] = {
        {"check", Command::Check},
        {"synthesize", Command::Synthesize},
        {"output-realize", Command::OutputRealize},
        {"analyze", Command::Analyze},
        {"transfer", Command::Transfer},
        {"examples", Command::Examples},
    };
    const char* help[] = {
        "Decide whether [trajectory] is exactly realizable",
        "Synthesize the open-loop control for [trajectory]",
        "Realize [output_desired] and synthesize its control",
        "Report the linearizing assumption and controllability",
        "Plan a state transfer from x0 to [transfer] x1",
        "List the built-in example systems",
    };
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        subs.push_back(app.add_subcommand(commands[i].first, help[i]));
    }
    subs[3]->add_flag("--output", m.output_analysis, "Add the output controllability analysis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return realize::cli::kExitUsage;
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (subs[i]->parsed()) {
            m.command = commands[i].second;
        }
    }
    m.step = step;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "config error: --set expects section.key=value, got '" << s << "'\n";
            return realize::cli::kExitUsage;
        }
        m.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }

    realize::cli::LogLevel level;
    try {
        level = realize::cli::log_level_from_env();
    } catch (const realize::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return realize::cli::kExitUsage;
    }
    return realize::cli::run(m, std::cout, std::cerr, level);
}
