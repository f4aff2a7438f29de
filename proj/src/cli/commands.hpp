#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nustar/grid_map.hpp"
#include "nustar/nav_model.hpp"
#include "nustar/planner.hpp"

namespace nustar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;

struct RunConfig {
    ModelKind model = ModelKind::planar;
    std::string map;
    // At most one uncertainty source.
    std::optional<double> gamma;
    std::string uncertainty_file;
    std::string contour;
    double beta = 0.0;
    double theta_floor = kPlanningThetaFloor;
    std::uint64_t seed = 1;
    std::size_t runs = 10000;
    std::optional<Cell> start;
    std::optional<int> start_heading;
    std::optional<Cell> goal;
    std::optional<int> goal_heading;
    int headings = 8;
    double max_turn = 45.0;
    double chi_goal = 1.0;
    std::size_t samples = 100000;  // contour integration
    double max_truncated = 1e-3;   // contour mass allowed past the neighbor ring
    std::vector<double> gammas;    // sweep
    std::string log;               // identify
    double cell_size = 1.0;
    std::size_t interval = 200;
    std::size_t max_shift = 50;
    std::string out;
    std::string svg;
    std::string trace;

    void validate() const;
};

// Flat "key = value" lines; '#' starts a comment. Keys match the long flag
// names with '-' replaced by '_'. Later assignments win.
void apply_config_text(RunConfig& config, std::istream& in, const std::string& source = "<config>");
void load_config(RunConfig& config, const std::string& path);
// Single key/value assignment shared by the file loader and the flag parser.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

// "r,c" or "r,c,h"; the heading index is optional.
std::pair<Cell, std::optional<int>> parse_pose(const std::string& text);
std::vector<double> parse_list(const std::string& text);

UncertaintyModel uncertainty_of(const RunConfig& config, int cols);
NavAutomaton build_model(const RunConfig& config);
PlannerOptions planner_options(const RunConfig& config);
// Start state from the config or the map's S cell.
StateId start_state(const NavAutomaton& nav, const RunConfig& config);

// row,col[,heading|incoming],measure,best_next_row,best_next_col
void write_plan_csv(std::ostream& out, const NavAutomaton& nav, const AssembledPlan& plan, double beta);
void write_plan_svg(std::ostream& out, const NavAutomaton& nav, const AssembledPlan& plan, double beta);

int cmd_plan(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_sweep_gamma(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_identify(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace nustar::cli
