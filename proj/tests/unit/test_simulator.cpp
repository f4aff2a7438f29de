#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nustar/errors.hpp"
#include "nustar/simulator.hpp"
#include "../support/generators.hpp"

using namespace nustar;

namespace {

struct Setup {
    NavAutomaton nav;
    AssembledPlan plan;
};

Setup make(const GridMap& g, double gamma) {
    Setup s{build_2d(g, gamma < 1.0 ? UncertaintyModel::uniform(gamma) : UncertaintyModel::none_model()), {}};
    s.plan = assemble(recursive_plan(s.nav));
    return s;
}

const char* kMap =
    "8 8\n"
    "S.......\n"
    "..##....\n"
    "..#.....\n"
    "....#...\n"
    ".#..#...\n"
    "....###.\n"
    ".......G\n"
    "........\n";

}  // namespace

TEST_CASE("gamma = 1 missions follow the gradient path") {
    const auto s = make(GridMap::parse_string(kMap), 1.0);
    const auto start = *s.nav.state_of({0, 0});
    const auto path = gradient_path(s.plan, s.nav, start, 0.0);
    for (std::uint64_t seed : {1, 2, 99}) {
        const auto m = execute_mission(s.nav, s.plan, start, 0.0, seed);
        CHECK(m.outcome == Outcome::goal_reached);
        std::vector<StateId> visited;
        for (const auto& e : m.trace) visited.push_back(e.state);
        CHECK(visited == path);
    }
    const auto mc = monte_carlo(s.nav, s.plan, start, 0.0, 50, 3);
    CHECK(mc.p_goal == 1.0);
}

TEST_CASE("infeasible start fails immediately") {
    auto g = GridMap::parse_string("S#...\n##...\n....G\n");
    const auto s = make(g, 0.9);
    const auto start = *s.nav.state_of({0, 0});
    const auto m = execute_mission(s.nav, s.plan, start, 0.0, 1);
    CHECK(m.outcome == Outcome::mission_failed);
    CHECK(m.moves_attempted == 0);
    CHECK(m.trace.size() == 1);
    CHECK(monte_carlo(s.nav, s.plan, start, 0.0, 100, 1).p_goal == 0.0);
    CHECK_THROWS_AS(execute_mission(s.nav, s.plan, *s.nav.state_of({0, 1}), 0.0, 1), PreconditionError);
}

TEST_CASE("seeded determinism") {
    const auto s = make(GridMap::parse_string(kMap), 0.8);
    const auto start = *s.nav.state_of({0, 0});
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto a = execute_mission(s.nav, s.plan, start, 0.3, seed);
        const auto b = execute_mission(s.nav, s.plan, start, 0.3, seed);
        std::ostringstream ta, tb;
        write_trace_csv(ta, s.nav, a);
        write_trace_csv(tb, s.nav, b);
        CHECK(ta.str() == tb.str());
    }
    const auto m1 = monte_carlo(s.nav, s.plan, start, 0.0, 2000, 7, 1);
    const auto m4 = monte_carlo(s.nav, s.plan, start, 0.0, 2000, 7, 4);
    CHECK(m1.p_goal == m4.p_goal);
    CHECK(m1.p_obstacle == m4.p_obstacle);
}

TEST_CASE("mission result invariants") {
    const auto s = make(GridMap::parse_string(kMap), 0.7);
    const auto start = *s.nav.state_of({0, 0});
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto m = execute_mission(s.nav, s.plan, start, 0.0, seed);
        REQUIRE(!m.trace.empty());
        CHECK(m.trace.front().state == start);
        CHECK(m.trace.front().kind == StepKind::start);
        const auto last = m.trace.back().state;
        if (m.outcome == Outcome::goal_reached) CHECK(s.nav.is_goal(last));
        if (m.outcome == Outcome::mission_failed) CHECK((s.nav.is_obstacle(last) || s.plan.field[last] <= 0.0));
        CHECK(m.states_entered <= m.steps);
    }
}

TEST_CASE("hand-solved absorption") {
    // One free cell walled in except for the goal to the east. Per step: the
    // commanded move 0.1 and its twin 0.025 reach the goal, the other seven
    // twins (0.175) hit walls, the disabled moves (0.7) stay put.
    auto g = GridMap::parse_string("###\n#.G\n###\n");
    const auto nav = build_2d(g, UncertaintyModel::uniform(0.8));
    Policy p(nav.size());
    const auto q = *nav.state_of({1, 1});
    p[q] = 0;  // east
    const auto a = absorbing_probabilities(nav, p, q);
    CHECK(a.p_goal == doctest::Approx(0.125 / 0.3).epsilon(1e-12));
    CHECK(a.p_goal + a.p_obstacle == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(absorbing_probabilities(nav, p, nav.goal_states.front()).p_goal == 1.0);
}

TEST_CASE("monte carlo agrees with the exact chain") {
    const auto s = make(testing::random_maze(8, 8, 0.2, 41), 0.85);
    StateId start = 0;
    while (s.nav.is_obstacle(start) || s.nav.is_goal(start) || s.plan.field[start] <= 0.0) ++start;
    const auto exact = exact_outcome(s.nav, s.plan, start, 0.0);
    const auto mc = monte_carlo(s.nav, s.plan, start, 0.0, 10000, 5);
    const double sigma = std::sqrt(exact.p_goal * (1 - exact.p_goal) / 10000);
    CHECK(std::abs(mc.p_goal - exact.p_goal) <= 3 * sigma + 1e-12);
    CHECK(mc.p_goal + mc.p_obstacle + mc.p_step_limit == doctest::Approx(1.0));
    CHECK(mc.se_goal == doctest::Approx(std::sqrt(mc.p_goal * (1 - mc.p_goal) / 10000)));
}

TEST_CASE("plan policy absorbs into goal or deadlock only") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto s = make(testing::random_maze(8, 8, 0.2, 60 + seed), 0.8);
        const auto policy = plan_policy(s.nav, s.plan);
        for (StateId q = 0; q < s.nav.size(); ++q) {
            if (s.nav.is_obstacle(q) || !policy[q]) continue;
            const auto a = absorbing_probabilities(s.nav, policy, q);
            CHECK(a.p_goal + a.p_obstacle == doctest::Approx(1.0).epsilon(1e-10));
            // psi = 2 p_goal - 1 on the supervised chain.
            CHECK(a.p_goal - a.p_obstacle == doctest::Approx(2 * a.p_goal - 1).epsilon(1e-10));
            // beta = 0 plan execution is the same chain.
            CHECK(exact_outcome(s.nav, s.plan, q, 0.0).p_goal == doctest::Approx(a.p_goal).epsilon(1e-9));
        }
    }
}

TEST_CASE("recurrent class without an exit is reported") {
    // Two free cells commanding moves into each other with no uncertainty.
    auto g = GridMap::parse_string("...\n###\n..G\n");
    const auto nav = build_2d(g, UncertaintyModel::none_model());
    Policy p(nav.size());
    p[*nav.state_of({0, 0})] = 0;  // east
    p[*nav.state_of({0, 1})] = 4;  // west
    p[*nav.state_of({0, 2})] = 4;
    CHECK_THROWS_AS(absorbing_probabilities(nav, p, *nav.state_of({0, 0})), InvariantError);
}

TEST_CASE("outcome export") {
    const auto s = make(GridMap::parse_string(kMap), 0.9);
    const auto start = *s.nav.state_of({0, 0});
    const auto mc = monte_carlo(s.nav, s.plan, start, 0.0, 100, 1);
    std::ostringstream out;
    write_outcome_json(out, mc, exact_outcome(s.nav, s.plan, start, 0.0));
    CHECK(out.str().find("\"p_goal\"") != std::string::npos);
    std::ostringstream trace;
    write_trace_csv(trace, s.nav, execute_mission(s.nav, s.plan, start, 0.0, 1));
    CHECK(trace.str().rfind("step,row,col,event_kind", 0) == 0);
}
