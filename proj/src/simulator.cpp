#include "nustar/simulator.hpp"

#include <algorithm>
#include <array>
#include <exception>
#include <mutex>
#include <numbers>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <thread>

#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>

#include "nustar/errors.hpp"
#include "nustar/random.hpp"

namespace nustar {

std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::goal_reached: return "goal_reached";
        case Outcome::mission_failed: return "mission_failed";
        case Outcome::step_limit: return "step_limit";
    }
    return "?";
}

std::string_view step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::start: return "start";
        case StepKind::controllable: return "controllable";
        case StepKind::uncontrollable: return "uncontrollable";
        case StepKind::collision: return "collision";
    }
    return "?";
}

namespace {

void check_plan(const NavAutomaton& nav, const AssembledPlan& plan, StateId start) {
    if (static_cast<std::size_t>(plan.field.size()) != nav.size()) throw PreconditionError("plan does not match automaton");
    if (start >= nav.size()) throw PreconditionError("start state out of range");
    if (nav.is_obstacle(start)) throw PreconditionError("start state is blocked");
}

EventId event_towards(const NavAutomaton& nav, StateId q, StateId target) {
    for (const auto& [e, t] : nav.controllable_successors(q))
        if (t == target) return e;
    throw InvariantError("no controllable event leads to the selected state");
}

// Distribution over {chosen event} and the uncontrollable events at q.
struct StepChoice {
    std::vector<const Transition*> options;
    double total = 0.0;
};

StepChoice step_distribution(const NavAutomaton& nav, StateId q, EventId chosen) {
    StepChoice c;
    for (const auto& t : nav.pfsa.row(q)) {
        const auto kind = nav.events[t.event].kind;
        if (t.event == chosen || kind == EventKind::uncontrollable) {
            c.options.push_back(&t);
            c.total += t.prob;
        }
    }
    return c;
}

std::optional<double> planar_incoming(const NavAutomaton& nav, std::optional<double> tracked) {
    return nav.kind == ModelKind::planar ? tracked : std::nullopt;
}

}  // namespace

MissionResult execute_mission(const NavAutomaton& nav, const AssembledPlan& plan, StateId start, double beta,
                              std::uint64_t seed, std::size_t max_steps) {
    check_plan(nav, plan, start);
    if (max_steps == 0) max_steps = 50 * nav.size();
    auto rng = stream_rng(seed, 0);
    MissionResult r;
    r.seed = seed;
    r.trace.push_back({start, StepKind::start});
    StateId q = start;
    std::optional<double> incoming;
    for (;;) {
        if (plan.goal[q]) {
            r.outcome = Outcome::goal_reached;
            break;
        }
        if (plan.field[q] <= 0.0) {
            r.outcome = Outcome::mission_failed;
            break;
        }
        if (r.steps >= max_steps) {
            r.outcome = Outcome::step_limit;
            break;
        }
        const StateId target = select_move(plan, nav, q, planar_incoming(nav, incoming), beta);
        const EventId chosen = event_towards(nav, q, target);
        const auto dist = step_distribution(nav, q, chosen);
        double u = uniform01(rng) * dist.total;
        const Transition* fired = dist.options.back();
        for (const auto* t : dist.options) {
            if (u < t->prob) {
                fired = t;
                break;
            }
            u -= t->prob;
        }
        ++r.moves_attempted;
        ++r.steps;
        const StateId next = fired->dst;
        StepKind kind = fired->event == chosen ? StepKind::controllable : StepKind::uncontrollable;
        if (nav.is_obstacle(next)) kind = StepKind::collision;
        if (next != q) ++r.states_entered;
        if (nav.xi[q].cell != nav.xi[next].cell && nav.xi[next].cell.row >= 0)
            incoming = move_angle(nav.xi[q].cell, nav.xi[next].cell);
        q = next;
        r.trace.push_back({q, kind});
    }
    return r;
}

OutcomeEstimate monte_carlo(const NavAutomaton& nav, const AssembledPlan& plan, StateId start, double beta,
                            std::size_t runs, std::uint64_t seed, unsigned threads) {
    if (runs == 0) throw PreconditionError("monte carlo needs at least one run");
    check_plan(nav, plan, start);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, runs));
    std::vector<std::array<std::size_t, 3>> counts(threads, {0, 0, 0});
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t run = w; run < runs; run += threads) {
                    const auto res = execute_mission(nav, plan, start, beta, splitmix64(seed ^ splitmix64(run)));
                    ++counts[w][static_cast<int>(res.outcome)];
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    std::array<std::size_t, 3> total{0, 0, 0};
    for (const auto& c : counts)
        for (int k = 0; k < 3; ++k) total[k] += c[k];
    OutcomeEstimate est;
    est.runs = runs;
    const double n = static_cast<double>(runs);
    est.p_goal = total[0] / n;
    est.p_obstacle = total[1] / n;
    est.p_step_limit = total[2] / n;
    est.se_goal = std::sqrt(est.p_goal * (1.0 - est.p_goal) / n);
    est.se_obstacle = std::sqrt(est.p_obstacle * (1.0 - est.p_obstacle) / n);
    return est;
}

Policy plan_policy(const NavAutomaton& nav, const AssembledPlan& plan) {
    Policy p(nav.size());
    for (StateId q = 0; q < nav.size(); ++q) {
        if (nav.is_obstacle(q) || plan.goal[q] || plan.field[q] <= 0.0) continue;
        p[q] = event_towards(nav, q, select_move(plan, nav, q, std::nullopt, 0.0));
    }
    return p;
}

Pfsa policy_automaton(const NavAutomaton& nav, const Policy& policy, const std::vector<char>& fail) {
    if (policy.size() != nav.size() || fail.size() != nav.size()) throw PreconditionError("policy size mismatch");
    std::vector<std::vector<Transition>> rows(nav.size());
    for (StateId s = 0; s < nav.size(); ++s)
        for (const auto& t : nav.pfsa.row(s)) {
            Transition x = t;
            if (fail[s]) x.dst = nav.deadlock;
            else if (t.controllable && (!policy[s] || *policy[s] != t.event)) x.dst = s;
            rows[s].push_back(x);
        }
    return nav.pfsa.with_rows(std::move(rows));
}

namespace {

constexpr int kGoal = -1;
constexpr int kFail = -2;

// Absorbing chain explored from a start key. `expand` fills the row of a key
// with (successor key or kGoal/kFail, probability).
template <class Key>
Absorption solve_chain(Key start, const std::function<int(const Key&)>& terminal,
                       const std::function<void(const Key&, std::vector<std::pair<Key, double>>&)>& expand) {
    if (int t = terminal(start); t == kGoal) return {1.0, 0.0};
    else if (t == kFail) return {0.0, 1.0};
    std::map<Key, int> index;
    std::vector<Key> keys{start};
    index[start] = 0;
    struct Row {
        std::vector<std::pair<int, double>> next;
        double goal = 0.0, fail = 0.0;
    };
    std::vector<Row> rows;
    std::vector<std::pair<Key, double>> buf;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        buf.clear();
        expand(keys[i], buf);
        Row row;
        for (const auto& [k, p] : buf) {
            const int t = terminal(k);
            if (t == kGoal) row.goal += p;
            else if (t == kFail) row.fail += p;
            else {
                auto [it, inserted] = index.emplace(k, static_cast<int>(keys.size()));
                if (inserted) keys.push_back(k);
                row.next.emplace_back(it->second, p);
            }
        }
        rows.push_back(std::move(row));
    }
    const auto m = rows.size();
    // Every transient state must reach an absorbing one.
    std::vector<std::vector<int>> pred(m);
    std::vector<char> ok(m, 0);
    std::vector<int> stack;
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& [j, p] : rows[i].next)
            if (p > 0.0) pred[j].push_back(static_cast<int>(i));
        if (rows[i].goal > 0.0 || rows[i].fail > 0.0) {
            ok[i] = 1;
            stack.push_back(static_cast<int>(i));
        }
    }
    while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        for (int i : pred[j])
            if (!ok[i]) {
                ok[i] = 1;
                stack.push_back(i);
            }
    }
    for (std::size_t i = 0; i < m; ++i)
        if (!ok[i])
            throw InvariantError("reachable recurrent class avoids both the goal and the deadlock state (chain state " +
                                 std::to_string(i) + ")");

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::MatrixXd b(static_cast<Eigen::Index>(m), 2);
    for (std::size_t i = 0; i < m; ++i) {
        trips.emplace_back(i, i, 1.0);
        for (const auto& [j, p] : rows[i].next) trips.emplace_back(i, j, -p);
        b(i, 0) = rows[i].goal;
        b(i, 1) = rows[i].fail;
    }
    Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw SolverError("absorbing chain factorization failed", 0.0);
    Eigen::MatrixXd x = lu.solve(b);
    for (int refine = 0; refine < 2; ++refine) x += lu.solve(b - a * x);
    Absorption r{x(0, 0), x(0, 1)};
    if (std::abs(r.p_goal + r.p_obstacle - 1.0) > 1e-10)
        throw InvariantError("absorption probabilities sum to " + format_double(r.p_goal + r.p_obstacle));
    return r;
}

}  // namespace

Absorption absorbing_probabilities(const Pfsa& supervised, const std::vector<StateId>& goals, StateId deadlock,
                                   StateId start) {
    if (start >= supervised.state_count()) throw PreconditionError("start state out of range");
    std::vector<char> goal(supervised.state_count(), 0);
    for (auto g : goals) goal.at(g) = 1;
    std::function<int(const StateId&)> terminal = [&](const StateId& s) {
        return goal[s] ? kGoal : (s == deadlock ? kFail : 0);
    };
    std::function<void(const StateId&, std::vector<std::pair<StateId, double>>&)> expand =
        [&](const StateId& s, std::vector<std::pair<StateId, double>>& out) {
            for (const auto& t : supervised.row(s)) out.emplace_back(t.dst, t.prob);
        };
    return solve_chain<StateId>(start, terminal, expand);
}

Absorption absorbing_probabilities(const NavAutomaton& nav, const Policy& policy, StateId start) {
    std::vector<char> fail(nav.size(), 0);
    for (StateId s = 0; s < nav.size(); ++s)
        fail[s] = !nav.is_obstacle(s) && !nav.is_goal(s) && !policy.at(s);
    return absorbing_probabilities(policy_automaton(nav, policy, fail), nav.goal_states, nav.deadlock, start);
}

Absorption exact_outcome(const NavAutomaton& nav, const AssembledPlan& plan, StateId start, double beta) {
    check_plan(nav, plan, start);
    // Chain key: state * 9 + (incoming direction + 1); direction -1 is "none".
    using Key = std::uint64_t;
    const bool track = nav.kind == ModelKind::planar && beta > 0.0;
    std::function<int(const Key&)> terminal = [&](const Key& k) {
        const auto s = static_cast<StateId>(k / 9);
        if (plan.goal[s]) return kGoal;
        if (nav.is_obstacle(s) || plan.field[s] <= 0.0) return kFail;
        return 0;
    };
    std::function<void(const Key&, std::vector<std::pair<Key, double>>&)> expand =
        [&](const Key& k, std::vector<std::pair<Key, double>>& out) {
            const auto s = static_cast<StateId>(k / 9);
            const int inc = static_cast<int>(k % 9) - 1;
            std::optional<double> angle;
            if (track && inc >= 0) angle = std::numbers::pi / 4.0 * inc;
            const StateId target = select_move(plan, nav, s, angle, beta);
            const auto dist = step_distribution(nav, s, event_towards(nav, s, target));
            for (const auto* t : dist.options) {
                int next_inc = inc;
                const Cell a = nav.xi[s].cell, b = nav.xi[t->dst].cell;
                if (track && a != b && b.row >= 0) next_inc = direction_between(a, b).value_or(inc);
                out.emplace_back(static_cast<Key>(t->dst) * 9 + (track ? next_inc + 1 : 0), t->prob / dist.total);
            }
        };
    return solve_chain<Key>(static_cast<Key>(start) * 9, terminal, expand);
}

void write_trace_csv(std::ostream& out, const NavAutomaton& nav, const MissionResult& result) {
    const bool heading = nav.kind == ModelKind::heading;
    out << "step,row,col" << (heading ? ",heading" : "") << ",event_kind\n";
    for (std::size_t k = 0; k < result.trace.size(); ++k) {
        const auto& e = result.trace[k];
        const auto& f = nav.xi[e.state];
        out << k << ',' << f.cell.row << ',' << f.cell.col;
        if (heading) out << ',' << f.heading;
        out << ',' << step_kind_name(e.kind) << '\n';
    }
}

void write_outcome_json(std::ostream& out, const OutcomeEstimate& mc, const std::optional<Absorption>& exact) {
    nlohmann::ordered_json j;
    j["runs"] = mc.runs;
    j["p_goal"] = mc.p_goal;
    j["p_obstacle"] = mc.p_obstacle;
    j["p_step_limit"] = mc.p_step_limit;
    j["se_goal"] = mc.se_goal;
    j["se_obstacle"] = mc.se_obstacle;
    if (exact) {
        j["exact_p_goal"] = exact->p_goal;
        j["exact_p_obstacle"] = exact->p_obstacle;
        j["psi"] = exact->p_goal - exact->p_obstacle;
        j["psi_identity_error"] = std::abs((exact->p_goal - exact->p_obstacle) - (2.0 * exact->p_goal - 1.0));
        j["z_score"] = mc.se_goal > 0.0 ? (mc.p_goal - exact->p_goal) / mc.se_goal : 0.0;
    }
    out << j.dump(2) << '\n';
}

}  // namespace nustar
