#include "nustar/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "nustar/errors.hpp"

namespace nustar {

double chi_goal_bound(std::size_t card_sigma_c, double theta_min, double gamma) {
    if (gamma == 0.0) throw PreconditionError("chi goal bound diverges at gamma = 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw PreconditionError("gamma must lie in (0,1]");
    if (!(theta_min > 0.0 && theta_min < 1.0)) throw PreconditionError("theta_min must lie in (0,1)");
    return static_cast<double>(card_sigma_c) / (1.0 - theta_min) * (1.0 / gamma - 1.0);
}

Pfsa raise_and_eliminate(const NavAutomaton& nav, const Pfsa& plant, const std::vector<char>& members, double chi) {
    std::vector<std::vector<Transition>> rows(plant.state_count());
    std::vector<double> chis = plant.chi();
    for (StateId s = 0; s < plant.state_count(); ++s) {
        const auto r = plant.row(s);
        if (!members[s]) {
            rows[s].assign(r.begin(), r.end());
            continue;
        }
        chis[s] = chi;
        std::size_t nctrl = 0;
        for (const auto& t : r) nctrl += nav.events[t.event].kind == EventKind::controllable;
        if (nctrl == 0) {
            rows[s].assign(r.begin(), r.end());
            continue;
        }
        for (const auto& t : r)
            if (nav.events[t.event].kind == EventKind::controllable)
                rows[s].push_back({t.event, t.dst, 1.0 / static_cast<double>(nctrl), t.controllable});
            else if (nav.events[t.event].kind != EventKind::uncontrollable)
                rows[s].push_back(t);
    }
    return Pfsa(plant.state_count(), plant.event_count(), std::move(rows), std::move(chis));
}

namespace {

std::vector<char> positive_set(const Eigen::VectorXd& nu) {
    std::vector<char> q(static_cast<std::size_t>(nu.size()));
    for (Eigen::Index i = 0; i < nu.size(); ++i) q[i] = nu[i] > 0.0;
    return q;
}

}  // namespace

PlanStack recursive_plan(const NavAutomaton& nav, const PlannerOptions& options) {
    if (nav.goal_states.empty()) throw PreconditionError("navigation automaton has no goal state");
    const std::size_t n = nav.size();
    const std::size_t card = nav.controllable_event_count();
    const double gamma = gamma_of(nav);

    PlanStack stack;
    Eigen::VectorXd indicator = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (auto g : nav.goal_states) indicator[g] = 1.0;
    stack.nu.push_back(indicator);
    stack.q.push_back(positive_set(indicator));
    stack.theta_min.push_back(0.0);
    stack.chi_goal.push_back(0.0);
    stack.supervisor_iterations.push_back(0);

    auto chi_for = [&](double theta) {
        const double bound = gamma < 1.0 ? chi_goal_bound(card, theta, gamma) : 0.0;
        return std::max(options.chi_goal_floor, options.chi_goal_margin * bound);
    };

    Pfsa base = nav.pfsa;  // cumulative eliminations, chi untouched outside Q
    double chi = std::max(options.chi_goal_floor, gamma < 1.0 ? options.chi_goal_margin * card * (1.0 / gamma - 1.0) : 0.0);
    for (std::size_t k = 1;; ++k) {
        if (k > n) throw InvariantError("recursive planning exceeded Card(Q) = " + std::to_string(n) + " steps");
        const auto& prev = stack.q.back();
        SupervisionResult res;
        Pfsa plant = base;
        for (std::size_t refit = 0;; ++refit) {
            std::vector<double> chis = base.chi();
            for (std::size_t i = 0; i < n; ++i)
                if (prev[i]) chis[i] = chi;
            plant = base.with_chi(std::move(chis));
            res = optimize(plant, options.supervisor);
            const double needed = gamma < 1.0 ? chi_goal_bound(card, res.theta_min, gamma) : 0.0;
            if (chi > needed) break;
            if (refit >= options.max_chi_refits)
                throw InvariantError("goal weight does not exceed its sufficient bound after refitting");
            chi = chi_for(res.theta_min);
        }
        auto members = positive_set(res.nu_sharp.values);
        if (options.check_one_hop) {
            for (StateId s = 0; s < n; ++s) {
                if (prev[s] || nav.is_obstacle(s)) continue;
                for (const auto& [e, t] : nav.controllable_successors(s))
                    if (prev[t] && !members[s]) {
                        std::ostringstream os;
                        os << "state " << s << " has a controllable move into Q_" << (k - 1)
                           << " but non-positive measure " << res.nu_sharp.values[s] << " at step " << k;
                        throw InvariantError(os.str());
                    }
            }
        }
        stack.nu.push_back(res.nu_sharp.values);
        stack.theta_min.push_back(res.theta_min);
        stack.chi_goal.push_back(chi);
        stack.supervisor_iterations.push_back(res.iterations);
        const bool done = members == prev;
        stack.q.push_back(members);
        if (done) break;
        base = raise_and_eliminate(nav, base, stack.q.back(), chi);
        chi = chi_for(res.theta_min);
    }
    return stack;
}

AssembledPlan assemble(const PlanStack& stack) {
    if (stack.nu.empty()) throw PreconditionError("empty plan stack");
    const auto n = stack.nu[0].size();
    AssembledPlan plan;
    plan.field = Eigen::VectorXd::Zero(n);
    plan.first_step.assign(static_cast<std::size_t>(n), -1);
    plan.goal.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i)
        if (stack.nu[0][i] > 0.0) {
            plan.first_step[i] = 0;
            plan.goal[i] = 1;
        }
    for (std::size_t k = 1; k < stack.nu.size(); ++k) {
        const auto& prev = stack.nu[k - 1];
        const auto& cur = stack.nu[k];
        // Scale by the step's largest weight so newly positive states stay below 1.
        const double scale = std::max(1.0, stack.chi_goal[k]);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (prev[i] > 0.0) {
                plan.field[i] += 1.0;
            } else if (cur[i] > 0.0) {
                plan.field[i] += cur[i] / scale;
                if (plan.first_step[i] < 0) plan.first_step[i] = static_cast<int>(k);
            }
        }
    }
    return plan;
}

std::vector<StateId> improving_states(const AssembledPlan& plan, const NavAutomaton& nav, StateId q) {
    if (q >= nav.size()) throw PreconditionError("state out of range");
    if (nav.is_obstacle(q)) throw PreconditionError("next states requested for blocked state " + std::to_string(q));
    std::vector<StateId> out;
    const double here = plan.field[q];
    if (plan.goal[q] || here <= 0.0) return out;
    for (const auto& [e, t] : nav.controllable_successors(q))
        if (plan.field[t] > here) out.push_back(t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<StateId> next_states(const AssembledPlan& plan, const NavAutomaton& nav, StateId q) {
    auto cand = improving_states(plan, nav, q);
    if (cand.empty()) return cand;
    double best = -std::numeric_limits<double>::infinity();
    for (auto s : cand) best = std::max(best, plan.field[s]);
    std::erase_if(cand, [&](StateId s) { return plan.field[s] < best - kMoveTieTolerance; });
    return cand;
}

double move_angle(Cell a, Cell b) {
    return std::atan2(-static_cast<double>(b.row - a.row), static_cast<double>(b.col - a.col));
}

std::optional<double> intrinsic_heading(const NavAutomaton& nav, StateId q) {
    const auto& f = nav.xi.at(q);
    if (nav.kind == ModelKind::heading && f.heading >= 0)
        return 2.0 * std::numbers::pi * f.heading / nav.headings;
    if (nav.kind == ModelKind::history && f.incoming >= 0 && f.incoming < kRest)
        return std::numbers::pi / 4.0 * f.incoming;
    return std::nullopt;
}

StateId select_move(const AssembledPlan& plan, const NavAutomaton& nav, StateId q, std::optional<double> incoming,
                    double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw PreconditionError("beta must lie in [0,1]");
    const auto cand = next_states(plan, nav, q);
    if (cand.empty()) {
        if (plan.goal[q]) throw PreconditionError("no move from state " + std::to_string(q) + ": goal reached");
        throw PreconditionError("no move from state " + std::to_string(q) + ": infeasible");
    }
    if (!incoming) incoming = intrinsic_heading(nav, q);
    StateId best = cand.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (auto s : cand) {
        double c = 1.0;
        if (incoming) {
            const Cell from = nav.xi[q].cell, to = nav.xi[s].cell;
            if (from != to) c = std::cos(move_angle(from, to) - *incoming);
        }
        const double score = (1.0 - beta) * plan.field[s] + beta * c;
        if (score > best_score) {
            best_score = score;
            best = s;
        }
    }
    return best;
}

bool feasible(const AssembledPlan& plan, StateId q) { return plan.field[q] > 0.0; }

std::vector<StateId> gradient_path(const AssembledPlan& plan, const NavAutomaton& nav, StateId start, double beta) {
    std::vector<StateId> path{start};
    std::optional<double> incoming;
    StateId q = start;
    while (!nav.is_obstacle(q) && !plan.goal[q] && plan.field[q] > 0.0) {
        if (path.size() > nav.size()) throw InvariantError("gradient path revisits states");
        const StateId nxt =
            select_move(plan, nav, q, nav.kind == ModelKind::planar ? incoming : std::nullopt, beta);
        if (nav.xi[q].cell != nav.xi[nxt].cell) incoming = move_angle(nav.xi[q].cell, nav.xi[nxt].cell);
        q = nxt;
        path.push_back(q);
    }
    return path;
}

double path_length(const NavAutomaton& nav, const std::vector<StateId>& path) {
    double len = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        const Cell a = nav.xi[path[k - 1]].cell, b = nav.xi[path[k]].cell;
        len += std::hypot(static_cast<double>(a.row - b.row), static_cast<double>(a.col - b.col));
    }
    return len;
}

std::size_t heading_changes(const NavAutomaton& nav, const std::vector<StateId>& path) {
    std::size_t changes = 0;
    std::optional<std::pair<int, int>> last;
    for (std::size_t k = 1; k < path.size(); ++k) {
        const Cell a = nav.xi[path[k - 1]].cell, b = nav.xi[path[k]].cell;
        const std::pair<int, int> d{b.row - a.row, b.col - a.col};
        if (d == std::pair<int, int>{0, 0}) continue;
        if (last && *last != d) ++changes;
        last = d;
    }
    return changes;
}

}  // namespace nustar
