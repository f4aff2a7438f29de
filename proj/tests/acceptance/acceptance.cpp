// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures. Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nustar/measure_solver.hpp"
#include "nustar/nav_model.hpp"
#include "nustar/planner.hpp"
#include "nustar/simulator.hpp"
#include "nustar/supervisor.hpp"
#include "nustar/uncertainty_id.hpp"
#include "../support/generators.hpp"

using namespace nustar;
namespace nt = nustar::testing;

namespace {

constexpr double kOptimalityTol = 1e-9;
constexpr double kMonotoneTol = 1e-10;
constexpr double kDominanceMargin = -1e-9;
constexpr double kAbsorptionSumTol = 1e-10;
constexpr double kSigmas = 3.0;
constexpr double kSymmetryTol = 1e-3;

struct Verdict {
    bool pass = false;
    std::string detail;
};

// Iteration measures gathered from every optimize run in this binary.
std::size_t g_monotone_runs = 0;
std::size_t g_monotone_violations = 0;
double g_monotone_worst = 0.0;

void record_monotonicity(const SupervisionResult& r) {
    ++g_monotone_runs;
    const auto& m = r.iteration_measures;
    for (std::size_t k = 0; k + 1 < m.size(); ++k) {
        const double drop = (m[k] - m[k + 1]).maxCoeff();
        g_monotone_worst = std::max(g_monotone_worst, drop);
        if (drop > kMonotoneTol) ++g_monotone_violations;
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1. optimize dominates every supervisor obtained by enumeration.
Verdict optimality_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    nt::PfsaShape shape;
    shape.max_states = 8;
    shape.max_controllable = 12;
    std::size_t cases = 0, violations = 0, supervisors = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 120; ++seed) {
        const Pfsa p = nt::random_pfsa(seed, shape);
        const auto r = optimize(p);
        record_monotonicity(r);
        const auto arcs = p.controllable_arcs();
        const std::size_t subsets = std::size_t{1} << arcs.size();
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            ArcSet d;
            for (std::size_t i = 0; i < arcs.size(); ++i)
                if (mask >> i & 1) d.insert(arcs[i]);
            const Eigen::VectorXd nu = supervised_measure(p, d, r.theta_min);
            const double gap = (nu - r.nu_sharp.values).maxCoeff();
            worst = std::max(worst, gap);
            if (gap > kOptimalityTol) ++violations;
            ++supervisors;
        }
        ++cases;
    }
    const double secs = seconds_since(t0);
    return {violations == 0 && secs < 60.0,
            fmt("%zu automata, %zu supervisors, violations %zu, worst excess %.3g, %.1fs", cases, supervisors,
                violations, worst, secs)};
}

// Partial sums of the string expansion up to length L, grouped by end state.
Eigen::VectorXd partial_sums(const Pfsa& p, double theta, int length) {
    const auto n = p.state_count();
    Eigen::VectorXd total = Eigen::VectorXd::Zero(n);
    for (StateId s = 0; s < n; ++s) {
        Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
        mass[s] = theta;
        for (int len = 0; len <= length; ++len) {
            for (StateId q = 0; q < n; ++q) total[s] += mass[q] * p.chi()[q];
            Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
            for (StateId q = 0; q < n; ++q)
                for (const auto& t : p.row(q)) next[t.dst] += mass[q] * (1.0 - theta) * t.prob;
            mass = next;
        }
    }
    return total;
}

// Explicit enumeration of every word up to length L (small L only).
double enumerate_words(const Pfsa& p, StateId s, double theta, int length) {
    double sum = 0.0;
    std::vector<EventId> word;
    std::function<void(StateId)> walk = [&](StateId q) {
        sum += string_measure(p, s, word, theta);
        if (static_cast<int>(word.size()) == length) return;
        for (const auto& t : p.row(q)) {
            word.push_back(t.event);
            walk(t.dst);
            word.pop_back();
        }
    };
    walk(s);
    return sum;
}

// 2. String expansion agrees with the linear solve within the tail bound.
Verdict measure_oracle() {
    constexpr double theta = 0.1;
    constexpr int length = 40;
    constexpr int enum_length = 7;
    nt::PfsaShape shape;
    shape.max_states = 6;
    std::size_t cases = 0, misses = 0, enum_misses = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 1000; seed < 1060; ++seed) {
        const Pfsa p = nt::random_pfsa(seed, shape);
        const auto nu = renormalized_measure(transition_matrix(p), p.chi_vector(), theta).values;
        const auto sums = partial_sums(p, theta, length);
        const double chi_max = p.chi_vector().lpNorm<Eigen::Infinity>();
        const double tail = std::pow(1.0 - theta, length + 1) * chi_max;
        for (StateId s = 0; s < p.state_count(); ++s) {
            const double err = std::abs(nu[s] - sums[s]);
            if (tail > 0) worst_ratio = std::max(worst_ratio, err / tail);
            if (err > tail + 1e-15) ++misses;
        }
        const auto short_sums = partial_sums(p, theta, enum_length);
        for (StateId s = 0; s < p.state_count(); ++s)
            if (std::abs(enumerate_words(p, s, theta, enum_length) - short_sums[s]) > 1e-12) ++enum_misses;
        ++cases;
    }
    return {misses == 0 && enum_misses == 0,
            fmt("%zu automata, L=%d: tail-bound misses %zu (worst err/bound %.3f); word enumeration L=%d mismatches %zu",
                cases, length, misses, worst_ratio, enum_length, enum_misses)};
}

// 3. Iteration measures never decrease; fed by every optimize call above and
// by supervised maze plants.
Verdict monotonicity() {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto nav = build_2d(nt::random_maze(10, 10, 0.2, seed), UncertaintyModel::uniform(0.8));
        PlannerOptions opt;
        opt.supervisor.record_iterations = true;
        record_monotonicity(optimize(nav.pfsa, opt.supervisor));
    }
    return {g_monotone_violations == 0, fmt("%zu optimize runs, violations %zu, largest decrease %.3g",
                                            g_monotone_runs, g_monotone_violations, g_monotone_worst)};
}

struct MazeCorpusResult {
    std::size_t instances = 0;
    std::size_t feasibility_mismatches = 0;
    std::size_t local_maxima = 0;
    std::size_t k_over_card = 0;
    std::size_t max_k = 0;
    double seconds = 0.0;
};

MazeCorpusResult maze_corpus() {
    const auto t0 = std::chrono::steady_clock::now();
    MazeCorpusResult out;
    for (double gamma : {0.7, 0.85, 1.0}) {
        for (std::uint64_t seed = 1; seed <= 200; ++seed) {
            const auto grid = nt::random_maze(12, 12, 0.25, seed);
            const auto nav =
                build_2d(grid, gamma < 1.0 ? UncertaintyModel::uniform(gamma) : UncertaintyModel::none_model());
            const auto stack = recursive_plan(nav);
            const auto plan = assemble(stack);
            const auto reach = nt::controllable_reachability(nav);
            for (StateId q = 0; q < nav.size(); ++q) {
                if (nav.is_obstacle(q)) continue;
                if ((plan.field[q] > 0.0) != (reach[q] != 0)) ++out.feasibility_mismatches;
                if (plan.field[q] > 0.0 && !nav.is_goal(q) && improving_states(plan, nav, q).empty())
                    ++out.local_maxima;
            }
            out.max_k = std::max(out.max_k, stack.steps());
            if (stack.steps() > nav.size()) ++out.k_over_card;
            ++out.instances;
        }
    }
    out.seconds = seconds_since(t0);
    return out;
}

// Feasible non-goal state farthest (Euclidean) from the first goal.
StateId far_start(const NavAutomaton& nav, const AssembledPlan& plan) {
    StateId start = nav.goal_states.front();
    double far = -1.0;
    const Cell g = nav.grid.goals().front();
    for (StateId q = 0; q < nav.size(); ++q) {
        if (nav.is_obstacle(q) || nav.is_goal(q) || plan.field[q] <= 0.0) continue;
        const Cell x = nav.xi[q].cell;
        const double d = std::hypot(x.row - g.row, x.col - g.col);
        if (d > far) far = d, start = q;
    }
    return start;
}

// 7. The plan's policy beats random feasible policies from the mission start.
// Every other state is compared too and reported, without gating: states
// first reached in a later recursion step are steered toward the previous
// layer, not toward the goal itself.
Verdict dominance() {
    constexpr double gamma = 0.8;
    std::size_t comparisons = 0, violations = 0, sum_misses = 0, other_states = 0, other_violations = 0;
    double worst = 0.0, worst_other = 0.0, worst_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto nav = build_2d(nt::random_maze(10, 10, 0.2, 500 + seed), UncertaintyModel::uniform(gamma));
        const auto plan = assemble(recursive_plan(nav));
        const StateId start = far_start(nav, plan);
        const Policy best = plan_policy(nav, plan);
        std::vector<char> none(nav.size(), 0);
        const auto opt = nt::absorption_all(policy_automaton(nav, best, none), nav.goal_states, nav.deadlock);
        for (StateId q = 0; q < nav.size(); ++q) {
            if (nav.is_obstacle(q) || !best[q] && !nav.is_goal(q)) continue;
            const double s = opt.goal[q] + opt.fail[q];
            worst_sum = std::max(worst_sum, std::abs(s - 1.0));
            if (std::abs(s - 1.0) > kAbsorptionSumTol) ++sum_misses;
        }
        auto rng = stream_rng(seed, 77);
        for (int k = 0; k < 50; ++k) {
            Policy random(nav.size());
            for (StateId q = 0; q < nav.size(); ++q) {
                if (nav.is_obstacle(q) || nav.is_goal(q)) continue;
                std::vector<EventId> safe;
                for (const auto& [e, t] : nav.controllable_successors(q))
                    if (!nav.is_obstacle(t)) safe.push_back(e);
                if (!safe.empty()) random[q] = safe[rng() % safe.size()];
            }
            const auto other = nt::absorption_all(policy_automaton(nav, random, none), nav.goal_states, nav.deadlock);
            const double margin = opt.goal[start] - other.goal[start];
            worst = std::min(worst, margin);
            if (margin < kDominanceMargin) ++violations;
            ++comparisons;
            for (StateId q = 0; q < nav.size(); ++q) {
                if (nav.is_obstacle(q) || q == start) continue;
                const double m = opt.goal[q] - other.goal[q];
                worst_other = std::min(worst_other, m);
                if (m < kDominanceMargin) ++other_violations;
                ++other_states;
            }
        }
    }
    return {violations == 0 && sum_misses == 0,
            fmt("%zu start comparisons, violations %zu, worst margin %.3g; |p_goal+p_fail-1| max %.3g; "
                "other states (not gated): %zu of %zu below margin, worst %.3g",
                comparisons, violations, worst, worst_sum, other_violations, other_states, worst_other)};
}

// 8. Monte Carlo against the exact chain.
Verdict monte_carlo_consistency() {
    constexpr std::size_t runs = 10000;
    struct Config {
        std::uint64_t maze;
        double gamma;
        double beta;
    };
    const std::vector<Config> configs = {{1, 0.7, 0.0},  {2, 0.8, 0.0},  {3, 0.9, 0.0}, {4, 0.95, 0.0},
                                         {5, 0.75, 0.5}, {6, 0.85, 1.0}, {7, 0.6, 0.0}, {8, 0.9, 0.35},
                                         {9, 0.8, 0.75}, {10, 1.0, 0.0}};
    std::size_t fails = 0;
    double worst = 0.0;
    std::ostringstream notes;
    for (const auto& c : configs) {
        const auto grid = nt::random_maze(12, 12, 0.2, 900 + c.maze);
        const auto nav =
            build_2d(grid, c.gamma < 1.0 ? UncertaintyModel::uniform(c.gamma) : UncertaintyModel::none_model());
        const auto plan = assemble(recursive_plan(nav));
        const StateId start = far_start(nav, plan);
        const auto exact = exact_outcome(nav, plan, start, c.beta);
        const auto mc = monte_carlo(nav, plan, start, c.beta, runs, c.maze);
        const double sigma = std::sqrt(exact.p_goal * (1.0 - exact.p_goal) / runs);
        const double dev = std::abs(mc.p_goal - exact.p_goal);
        const double z = sigma > 0 ? dev / sigma : (dev > 0 ? INFINITY : 0.0);
        worst = std::max(worst, z);
        if (dev > kSigmas * sigma) ++fails;
        notes << fmt(" %.3f/%.3f", mc.p_goal, exact.p_goal);
    }
    return {fails == 0, fmt("%zu configs at %zu runs, outside 3 sigma %zu, worst %.2f sigma; mc/exact:", configs.size(),
                            runs, fails, worst) +
                            notes.str()};
}

// Cluttered 50x80 field: a short route through a one-cell gap in a wall and a
// long route around it through open space.
GridMap corridor_maze() {
    GridMap g(50, 80);
    auto rng = stream_rng(2024, 3);
    for (int r = 0; r < 50; ++r)
        for (int c = 0; c < 80; ++c)
            if (uniform01(rng) < 0.06) g.set_blocked({r, c});
    // Wall across most of the field with a narrow gap.
    for (int r = 0; r < 38; ++r)
        for (int c = 39; c <= 40; ++c) g.set_blocked({r, c});
    for (int c = 39; c <= 40; ++c) g.set_blocked({20, c}, false);
    for (int c = 30; c <= 49; ++c) {
        g.set_blocked({19, c}, false);
        g.set_blocked({20, c}, false);
        g.set_blocked({21, c}, false);
    }
    // Open band under the wall.
    for (int r = 38; r < 50; ++r)
        for (int c = 0; c < 80; ++c) g.set_blocked({r, c}, false);
    const Cell start{20, 8}, goal{20, 72};
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
            g.set_blocked({start.row + dr, start.col + dc}, false);
            g.set_blocked({goal.row + dr, goal.col + dc}, false);
        }
    g.set_start(start);
    g.set_goals({goal});
    return g;
}

double best_case_length(const GridMap& grid, double gamma) {
    const auto nav = build_2d(grid, gamma < 1.0 ? UncertaintyModel::uniform(gamma) : UncertaintyModel::none_model());
    const auto plan = assemble(recursive_plan(nav));
    const auto start = *nav.state_of(*grid.start());
    if (plan.field[start] <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return path_length(nav, gradient_path(plan, nav, start, 0.0));
}

// 9. Path length peaks at intermediate uncertainty.
Verdict gamma_sweep() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = corridor_maze();
    const double l1 = best_case_length(grid, 1.0);
    const double l08 = best_case_length(grid, 0.8);
    const double l01 = best_case_length(grid, 0.1);
    const double secs = seconds_since(t0);
    return {l08 > l1 && l08 > l01 && secs < 600.0,
            fmt("50x80 maze: length gamma=1.0 %.2f, gamma=0.8 %.2f, gamma=0.1 %.2f, %.1fs", l1, l08, l01, secs)};
}

GridMap turn_scenario() {
    return GridMap::parse_string(
        "20 50\n"
        "..................................................\n"
        "..................................................\n"
        "..........######..................................\n"
        "..........######..................................\n"
        "..........######..............#####...............\n"
        "..............................#####...............\n"
        "..............................#####...............\n"
        "..............................#####.......G.......\n"
        "..............S...............#####...............\n"
        "..............................#####...............\n"
        "..................................................\n"
        "..................................................\n"
        ".....................########.....................\n"
        ".....................########.....................\n"
        "..................................................\n"
        "..................................................\n"
        "..................................................\n"
        "..................................................\n"
        "..................................................\n"
        "..................................................\n");
}

// 10. The turn penalty straightens the executed path on a shared field.
// No gamma is attached to the scenario; it runs without uncertainty, where
// the field has exact ties for the penalty to break.
Verdict turn_penalty() {
    const auto grid = turn_scenario();
    const auto nav = build_2d(grid, UncertaintyModel::none_model());
    const auto plan = assemble(recursive_plan(nav));
    const auto s = *nav.state_of(*grid.start());
    const auto p0 = gradient_path(plan, nav, s, 0.0);
    const auto p1 = gradient_path(plan, nav, s, 1.0);
    const auto h0 = heading_changes(nav, p0), h1 = heading_changes(nav, p1);
    const auto e0 = exact_outcome(nav, plan, s, 0.0), e1 = exact_outcome(nav, plan, s, 1.0);
    return {h1 < h0 && e0.p_goal == e1.p_goal,
            fmt("heading changes beta=0 %zu, beta=1 %zu; exact p_goal %.12g / %.12g", h0, h1, e0.p_goal, e1.p_goal)};
}

// 11. Shape of the sufficient goal weight.
Verdict chi_bound_shape() {
    bool ok = true;
    std::string why;
    auto check = [&](bool c, const char* what) {
        if (!c && ok) why = what;
        ok = ok && c;
    };
    double prev = INFINITY;
    for (double g = 0.001; g <= 1.0; g += 0.001) {
        const double b = chi_goal_bound(8, 0.01, g);
        check(b <= prev && (g < 0.999 ? b < prev : true), "not decreasing in gamma");
        prev = b;
    }
    for (std::size_t c = 1; c < 16; ++c)
        check(chi_goal_bound(c + 1, 0.01, 0.5) > chi_goal_bound(c, 0.01, 0.5), "not increasing in card");
    for (double t = 0.001; t < 0.5; t *= 1.5)
        check(chi_goal_bound(8, t * 1.5, 0.5) > chi_goal_bound(8, t, 0.5), "not increasing in theta");
    check(chi_goal_bound(8, 0.01, 1.0) == 0.0, "nonzero at gamma=1");
    const double lo = chi_goal_bound(8, 0.01, 1e-3), mid = chi_goal_bound(8, 0.01, 0.5);
    check(lo > 1e3 * mid, "gamma=1e-3 bound too small");
    return {ok, (ok ? std::string() : why + "; ") + fmt("bound(1e-3)=%.4g, bound(0.5)=%.4g, ratio %.4g", lo, mid, lo / mid)};
}

// 12. Without uncertainty the recursion adds nothing over one pass.
Verdict gamma_one_degeneracy() {
    std::size_t mazes = 0, starts = 0, differ = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto nav = build_2d(nt::random_maze(12, 12, 0.25, 3000 + seed), UncertaintyModel::none_model());
        const auto plan = assemble(recursive_plan(nav));
        const auto single = optimize(nav.pfsa, PlannerOptions{}.supervisor);
        AssembledPlan one;
        one.field = single.nu_sharp.values;
        one.goal.assign(nav.size(), 0);
        one.first_step.assign(nav.size(), -1);
        for (auto g : nav.goal_states) one.goal[g] = 1, one.first_step[g] = 0;
        for (StateId q = 0; q < nav.size(); ++q)
            if (!one.goal[q] && one.field[q] > 0.0) one.first_step[q] = 1;
        for (StateId q = 0; q < nav.size(); ++q) {
            if (nav.is_obstacle(q) || nav.is_goal(q)) continue;
            const bool a = plan.field[q] > 0.0, b = one.field[q] > 0.0;
            if (a != b) {
                ++differ;
                continue;
            }
            if (!a) continue;
            if (gradient_path(plan, nav, q, 0.0) != gradient_path(one, nav, q, 0.0)) ++differ;
            ++starts;
        }
        ++mazes;
    }
    return {differ == 0, fmt("%zu mazes, %zu starts, differing paths %zu", mazes, starts, differ)};
}

// 13. Identification recovers the probabilities of the contour that made the log.
Verdict pipeline_closure() {
    constexpr double sigma = 0.3;
    constexpr std::size_t log_samples = 40000;
    const auto truth = DeviationContour::gaussian(sigma);
    IntegrationOptions io;
    io.samples = 400000;
    io.max_truncated = 1e-3;
    const auto analytic = cell_uncontrollable_probabilities(truth, io);

    const auto log = synthesize_log(truth, log_samples, 6, 11);
    const auto hist = identify_histogram(log, {.max_shift = 20});
    const auto recovered_contour = DeviationContour::from_histogram(hist);
    io.seed = 2;
    const auto recovered = cell_uncontrollable_probabilities(recovered_contour, io);

    std::size_t outside = 0;
    double worst = 0.0;
    for (int d = 0; d < kDirections; ++d) {
        const double p = analytic.neighbor[d];
        const double s = std::sqrt(analytic.neighbor_se[d] * analytic.neighbor_se[d] +
                                   recovered.neighbor_se[d] * recovered.neighbor_se[d] + p * (1 - p) / log_samples);
        const double z = std::abs(recovered.neighbor[d] - p) / s;
        worst = std::max(worst, z);
        if (z > kSigmas) ++outside;
    }
    double edge_spread = 0.0, corner_spread = 0.0;
    for (int d = 2; d < kDirections; d += 2)
        edge_spread = std::max(edge_spread, std::abs(recovered.neighbor[d] - recovered.neighbor[0]));
    for (int d = 3; d < kDirections; d += 2)
        corner_spread = std::max(corner_spread, std::abs(recovered.neighbor[d] - recovered.neighbor[1]));
    return {outside == 0 && edge_spread <= kSymmetryTol && corner_spread <= kSymmetryTol,
            fmt("E %.4f vs %.4f, NE %.4f vs %.4f; outside 3 sigma %zu (worst %.2f); edge spread %.2g, corner spread "
                "%.2g",
                recovered.neighbor[0], analytic.neighbor[0], recovered.neighbor[1], analytic.neighbor[1], outside,
                worst, edge_spread, corner_spread)};
}

}  // namespace

int main() {
    int failures = 0;
    auto run = [&](int id, const char* name, const std::function<Verdict()>& f) {
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            v = f();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << v.detail
                  << fmt(" (%.1fs)", seconds_since(t0)) << std::endl;
    };

    run(1, "supervisor optimality against enumeration", optimality_oracle);
    run(2, "measure against string expansion", measure_oracle);
    run(3, "monotone iteration measures", monotonicity);

    MazeCorpusResult corpus;
    bool corpus_ok = true;
    std::string corpus_error;
    try {
        corpus = maze_corpus();
    } catch (const std::exception& e) {
        corpus_ok = false;
        corpus_error = e.what();
    }
    run(4, "feasible iff positive assembled measure", [&]() -> Verdict {
        if (!corpus_ok) return {false, "exception: " + corpus_error};
        return {corpus.feasibility_mismatches == 0,
                fmt("%zu plans, mismatches %zu, %.1fs", corpus.instances, corpus.feasibility_mismatches,
                    corpus.seconds)};
    });
    run(5, "no local maxima", [&]() -> Verdict {
        if (!corpus_ok) return {false, "exception: " + corpus_error};
        return {corpus.local_maxima == 0, fmt("%zu plans, violations %zu", corpus.instances, corpus.local_maxima)};
    });
    run(6, "recursion depth bound", [&]() -> Verdict {
        if (!corpus_ok) return {false, "exception: " + corpus_error};
        return {corpus.k_over_card == 0, fmt("K > Card(Q) on %zu plans; largest K %zu on 12x12 (%s 12)",
                                             corpus.k_over_card, corpus.max_k, corpus.max_k <= 12 ? "<=" : ">")};
    });
    run(7, "optimized policy dominates random feasible policies", dominance);
    run(8, "Monte Carlo within 3 sigma of exact", monte_carlo_consistency);
    run(9, "path length peaks at intermediate gamma", gamma_sweep);
    run(10, "turn penalty reduces heading changes", turn_penalty);
    run(11, "goal weight bound shape", chi_bound_shape);
    run(12, "gamma=1 matches a single pass", gamma_one_degeneracy);
    run(13, "identification closure", pipeline_closure);
    std::cout << failures << " of 13 criteria failed" << std::endl;
    return failures;
}
