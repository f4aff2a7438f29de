#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nustar/grid_map.hpp"
#include "nustar/pfsa.hpp"
#include "nustar/uncertainty.hpp"

namespace nustar {

enum class ModelKind { planar, heading, history };
std::string_view model_name(ModelKind k);
std::optional<ModelKind> parse_model(std::string_view name);

enum class EventKind { controllable, uncontrollable, collision };

struct EventInfo {
    std::string name;
    EventKind kind;
    int direction = -1;  // compass direction of the cell move, -1 for none
    int turn = 0;        // heading steps added (heading model)
};

// Geometric footprint of a state. The deadlock state has cell {-1,-1}.
struct Footprint {
    Cell cell{-1, -1};
    int heading = -1;   // heading model
    int incoming = -1;  // history model: direction of the move into cell, kRest when none
};

struct NavAutomaton {
    Pfsa pfsa;
    ModelKind kind = ModelKind::planar;
    GridMap grid;
    std::vector<EventInfo> events;
    std::vector<Footprint> xi;
    std::vector<StateId> goal_states;
    std::vector<StateId> obstacle_states;  // blocked cells and the deadlock state
    StateId deadlock = 0;
    int headings = 0;
    int max_turn_steps = 0;

    std::size_t size() const { return pfsa.state_count(); }
    bool is_goal(StateId q) const { return goal_flag_.at(q) != 0; }
    bool is_obstacle(StateId q) const { return obstacle_flag_.at(q) != 0; }
    // Cell states of a heading or history model all map to the same cell.
    std::vector<StateId> states_at(Cell c) const;
    std::optional<StateId> state_of(Cell c, int heading = -1, int incoming = -1) const;
    // (event, target) for controllable events defined at q, in event order.
    std::vector<std::pair<EventId, StateId>> controllable_successors(StateId q) const;
    std::size_t controllable_event_count() const;
    double chi_goal() const;

    void finalize();  // recomputes the goal/obstacle flags

private:
    std::vector<char> goal_flag_;
    std::vector<char> obstacle_flag_;
};

NavAutomaton build_2d(const GridMap& grid, const UncertaintyModel& unc, double chi_goal = 1.0);
NavAutomaton build_heading(const GridMap& grid, int headings, double max_turn_degrees, const UncertaintyModel& unc,
                           double chi_goal = 1.0);
NavAutomaton build_history(const GridMap& grid, const ContourTable& table, double chi_goal = 1.0);

// Collapses a history model onto cells, averaging event probabilities over
// the incoming directions of each cell.
NavAutomaton merge_history(const NavAutomaton& history);

double gamma_of(const NavAutomaton& nav);

// Size of the unrestricted (prev cell, cell) state space.
std::size_t history_state_bound(int rows, int cols);

// Copy of nav with a replacement plant (same structure, new chi or rows).
NavAutomaton with_pfsa(const NavAutomaton& nav, Pfsa pfsa);

}  // namespace nustar
