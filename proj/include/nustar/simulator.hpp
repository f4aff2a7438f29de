#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "nustar/nav_model.hpp"
#include "nustar/planner.hpp"

namespace nustar {

enum class Outcome { goal_reached, mission_failed, step_limit };
std::string_view outcome_name(Outcome o);

enum class StepKind { start, controllable, uncontrollable, collision };
std::string_view step_kind_name(StepKind k);

struct TraceEntry {
    StateId state;
    StepKind kind;
};

struct MissionResult {
    Outcome outcome = Outcome::mission_failed;
    std::vector<TraceEntry> trace;
    std::size_t moves_attempted = 0;
    std::size_t states_entered = 0;  // steps that changed state
    std::size_t steps = 0;
    std::uint64_t seed = 0;
};

struct OutcomeEstimate {
    double p_goal = 0.0;
    double p_obstacle = 0.0;
    double p_step_limit = 0.0;
    double se_goal = 0.0;
    double se_obstacle = 0.0;
    std::size_t runs = 0;
};

struct Absorption {
    double p_goal = 0.0;
    double p_obstacle = 0.0;
};

// max_steps = 0 means 50 * Card(Q).
MissionResult execute_mission(const NavAutomaton& nav, const AssembledPlan& plan, StateId start, double beta,
                              std::uint64_t seed, std::size_t max_steps = 0);

OutcomeEstimate monte_carlo(const NavAutomaton& nav, const AssembledPlan& plan, StateId start, double beta,
                            std::size_t runs, std::uint64_t seed, unsigned threads = 0);

// Chosen controllable event per state; nullopt where no move is commanded.
using Policy = std::vector<std::optional<EventId>>;

// beta = 0 plan policy (Markov in the state).
Policy plan_policy(const NavAutomaton& nav, const AssembledPlan& plan);

// Supervised plant of a policy: every controllable event except the chosen
// one is disabled; states listed in `fail` jump to the deadlock state.
Pfsa policy_automaton(const NavAutomaton& nav, const Policy& policy, const std::vector<char>& fail);

// Absorption into the goal set versus the deadlock state of a supervised plant.
Absorption absorbing_probabilities(const Pfsa& supervised, const std::vector<StateId>& goals, StateId deadlock,
                                   StateId start);
Absorption absorbing_probabilities(const NavAutomaton& nav, const Policy& policy, StateId start);

// Exact outcome of executing the plan with turn penalty beta; 2D models track
// the incoming direction as part of the chain state.
Absorption exact_outcome(const NavAutomaton& nav, const AssembledPlan& plan, StateId start, double beta);

void write_trace_csv(std::ostream& out, const NavAutomaton& nav, const MissionResult& result);
void write_outcome_json(std::ostream& out, const OutcomeEstimate& mc, const std::optional<Absorption>& exact);

}  // namespace nustar
