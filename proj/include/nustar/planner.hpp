#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nustar/nav_model.hpp"
#include "nustar/supervisor.hpp"

namespace nustar {

// Planning floor for the critical theta. The unsupervised plant of a maze
// loses all mass to the deadlock state, so its measures converge together as
// theta shrinks and their ordering keeps changing down to the resolution of
// the solve. The search stops at this floor instead of failing.
inline constexpr double kPlanningThetaFloor = 1e-6;
// Field values this close to the best successor count as tied.
inline constexpr double kMoveTieTolerance = 1e-9;

struct PlannerOptions {
    PlannerOptions() {
        supervisor.theta.floor = kPlanningThetaFloor;
        supervisor.theta.clamp_to_floor = true;
        supervisor.record_iterations = false;
    }
    SupervisorOptions supervisor;
    double chi_goal_margin = 1.01;  // factor over the sufficient bound
    double chi_goal_floor = 1.0;    // used when the bound is smaller (always at gamma = 1)
    std::size_t max_chi_refits = 8;
    bool check_one_hop = true;
};

struct PlanStack {
    // Entry k (k >= 1) holds step k; entry 0 is the goal indicator.
    std::vector<Eigen::VectorXd> nu;
    std::vector<std::vector<char>> q;  // membership of Q_k
    std::vector<double> theta_min;     // index 0 unused
    std::vector<double> chi_goal;      // weight of Q_{k-1} during step k; index 0 unused
    std::vector<std::size_t> supervisor_iterations;
    std::size_t steps() const { return nu.empty() ? 0 : nu.size() - 1; }
};

struct AssembledPlan {
    Eigen::VectorXd field;
    std::vector<int> first_step;  // 0 for goals, k when first positive at step k, -1 never
    std::vector<char> goal;
};

double chi_goal_bound(std::size_t card_sigma_c, double theta_min, double gamma);

PlanStack recursive_plan(const NavAutomaton& nav, const PlannerOptions& options = {});
AssembledPlan assemble(const PlanStack& stack);

// Plant used for recursion step k+1: chi raised on `members`, uncontrollable
// events at members removed and their mass spread over controllable events.
Pfsa raise_and_eliminate(const NavAutomaton& nav, const Pfsa& plant, const std::vector<char>& members, double chi);

// Controllable successors strictly above q within kMoveTieTolerance of the maximum.
std::vector<StateId> next_states(const AssembledPlan& plan, const NavAutomaton& nav, StateId q);
// All controllable successors strictly above q, in state order.
std::vector<StateId> improving_states(const AssembledPlan& plan, const NavAutomaton& nav, StateId q);

// Angle (radians, counter-clockwise from east, north up) of the move a -> b.
double move_angle(Cell a, Cell b);
// Incoming direction implied by the state itself (heading or history model).
std::optional<double> intrinsic_heading(const NavAutomaton& nav, StateId q);

// Turn-penalized choice among next_states; ties go to the lowest state.
StateId select_move(const AssembledPlan& plan, const NavAutomaton& nav, StateId q,
                    std::optional<double> incoming, double beta);

bool feasible(const AssembledPlan& plan, StateId q);

// Deterministic gradient ascent from start (no uncertainty injected).
std::vector<StateId> gradient_path(const AssembledPlan& plan, const NavAutomaton& nav, StateId start, double beta);
double path_length(const NavAutomaton& nav, const std::vector<StateId>& path);
std::size_t heading_changes(const NavAutomaton& nav, const std::vector<StateId>& path);

}  // namespace nustar
