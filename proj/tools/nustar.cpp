#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

struct Flag {
    const char* name;
    const char* help;
};

// Shared by every subcommand; values are applied after the config file so
// flags take precedence.
const std::vector<Flag> kCommon = {
    {"map", "occupancy grid file"},
    {"model", "2d | heading | history"},
    {"gamma", "uniform uncertainty parameter in (0,1]"},
    {"uncertainty-file", "uncertainty rows file"},
    {"contour", "deviation contour file"},
    {"beta", "turn penalty in [0,1]"},
    {"theta-floor", "smallest critical theta accepted"},
    {"start", "start pose r,c[,h]"},
    {"goal", "goal pose r,c[,h]"},
    {"headings", "heading count (heading model)"},
    {"max-turn", "largest turn per move in degrees (heading model)"},
    {"chi-goal", "characteristic weight of the goal"},
    {"seed", "random seed"},
    {"samples", "Monte Carlo samples for contour integration"},
    {"max-truncated", "contour mass allowed beyond the neighbor ring"},
    {"out", "output file or directory"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measure-based path planning under motion uncertainty"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "flat key = value config file (flags override it)");

    std::map<std::string, std::string> values;
    auto add_flags = [&](CLI::App* sub, const std::vector<Flag>& extra) {
        for (const auto* list : {&kCommon, &extra})
            for (const auto& f : *list) sub->add_option(std::string("--") + f.name, values[f.name], f.help);
    };

    auto* plan = app.add_subcommand("plan", "plan and export the gradient field");
    add_flags(plan, {{"svg", "SVG heatmap output"}});
    auto* sweep = app.add_subcommand("sweep-gamma", "path length and goal probability across gamma values");
    add_flags(sweep, {{"gammas", "comma separated gamma list"}});
    auto* identify = app.add_subcommand("identify", "estimate uncontrollable probabilities from a trajectory log");
    add_flags(identify, {{"log", "trajectory CSV"},
                         {"cell-size", "cell edge length in log units"},
                         {"interval", "samples per delay interval"},
                         {"max-shift", "largest delay searched, in samples"}});
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo missions against the exact outcome");
    add_flags(simulate, {{"runs", "number of missions"}, {"trace", "CSV trace of the first mission"}});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? nustar::cli::kExitOk : nustar::cli::kExitError;
    }

    nustar::cli::RunConfig config;
    try {
        if (!config_path.empty()) nustar::cli::load_config(config, config_path);
        CLI::App* sub = app.get_subcommands().front();
        for (const auto& [name, value] : values)
            if (const auto* opt = sub->get_option_no_throw("--" + name); opt && opt->count() > 0)
                nustar::cli::apply_setting(config, name, value);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return nustar::cli::kExitError;
    }

    if (plan->parsed()) return nustar::cli::cmd_plan(config, std::cout, std::cerr);
    if (sweep->parsed()) return nustar::cli::cmd_sweep_gamma(config, std::cout, std::cerr);
    if (identify->parsed()) return nustar::cli::cmd_identify(config, std::cout, std::cerr);
    return nustar::cli::cmd_simulate(config, std::cout, std::cerr);
}
