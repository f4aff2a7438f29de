#include <doctest.h>

#include <deque>
#include <sstream>

#include "nustar/errors.hpp"
#include "nustar/grid_map.hpp"
#include "nustar/nav_model.hpp"
#include "nustar/supervisor.hpp"
#include "nustar/uncertainty.hpp"
#include "../support/generators.hpp"

using namespace nustar;

namespace {

GridMap toy() {
    // 3x3 with cells 1 and 8 blocked, goal in the middle.
    auto g = GridMap::parse_string(".#.\n.G.\n..#\n");
    return g;
}

double row_total(const Pfsa& p, StateId s) {
    double t = 0.0;
    for (const auto& x : p.row(s)) t += x.prob;
    return t;
}

}  // namespace

TEST_CASE("grid map parsing") {
    const auto g = GridMap::parse_string("2 4\n#..G\nS...\n");
    CHECK(g.rows() == 2);
    CHECK(g.cols() == 4);
    CHECK(g.blocked({0, 0}));
    CHECK(g.goals() == std::vector<Cell>{{0, 3}});
    CHECK(g.start() == Cell{1, 0});
    CHECK(GridMap::parse_string(g.to_string()).to_string() == g.to_string());

    CHECK_THROWS_AS(GridMap::parse_string("2 3\n...\n"), ParseError);
    CHECK_THROWS_AS(GridMap::parse_string("..x\n"), ParseError);
    CHECK_THROWS_AS(GridMap::parse_string("...\n..\n"), ParseError);
    auto blocked_goal = GridMap::parse_string("..G\n");
    blocked_goal.set_blocked({0, 2});
    CHECK_THROWS_AS(blocked_goal.validate(), PreconditionError);
    CHECK_THROWS_AS(GridMap(0, 3).validate(), PreconditionError);
}

TEST_CASE("directions") {
    CHECK(parse_direction("NE") == 1);
    CHECK_FALSE(parse_direction("up"));
    CHECK(direction_between({5, 5}, {4, 5}) == 2);  // north is up
    CHECK(direction_between({5, 5}, {6, 6}) == 7);
    CHECK_FALSE(direction_between({5, 5}, {7, 5}));
}

TEST_CASE("2d model on the toy grid") {
    const auto nav = build_2d(toy(), UncertaintyModel::none_model());
    CHECK(nav.size() == 10);
    CHECK(nav.deadlock == 9);
    for (Cell b : {Cell{0, 1}, Cell{2, 2}}) {
        const auto s = *nav.state_of(b);
        REQUIRE(nav.pfsa.row(s).size() == 1);
        const auto& t = nav.pfsa.row(s)[0];
        CHECK(t.dst == nav.deadlock);
        CHECK(t.prob == 1.0);
        CHECK_FALSE(t.controllable);
        CHECK(nav.is_obstacle(s));
    }
    CHECK(nav.pfsa.row(nav.deadlock).size() == 1);
    CHECK(nav.pfsa.row(nav.deadlock)[0].dst == nav.deadlock);
    CHECK(nav.pfsa.chi()[nav.deadlock] == -1.0);
    const auto goal = *nav.state_of({1, 1});
    CHECK(nav.is_goal(goal));
    CHECK(nav.pfsa.chi()[goal] == 1.0);
    CHECK(gamma_of(nav) == 1.0);
    for (const auto& t : nav.pfsa.row(*nav.state_of({1, 0}))) CHECK(t.prob == doctest::Approx(0.125));
    // Interior cell with all eight neighbors free: eight 1/8 entries in Pi.
    const Eigen::MatrixXd pi(transition_matrix(nav.pfsa).pi);
    int eighths = 0;
    for (int j = 0; j < pi.cols(); ++j)
        if (std::abs(pi(goal, j) - 0.125) < 1e-15) ++eighths;
    CHECK(eighths == 8);
}

TEST_CASE("2d model with averaged uncertainty") {
    auto g = GridMap::parse_string("5 5\n.....\n.....\n..G..\n.....\n.....\n");
    UcRow row{};
    for (int d = 0; d < 8; ++d) row[d] = 0.07 / 8;
    const auto nav = build_2d(g, UncertaintyModel::averaged_row(row));
    CHECK(gamma_of(nav) == doctest::Approx(0.93).epsilon(1e-12));
    const auto q = *nav.state_of({0, 0});
    double ctrl = 0.0, uc = 0.0;
    for (const auto& t : nav.pfsa.row(q)) {
        if (t.controllable) {
            CHECK(t.prob == doctest::Approx(0.93 / 8));
            ctrl += t.prob;
        } else {
            uc += t.prob;
        }
    }
    CHECK(ctrl + uc == doctest::Approx(1.0));
    // No uncontrollable events at the goal.
    for (const auto& t : nav.pfsa.row(nav.goal_states.front())) CHECK(t.controllable);
}

TEST_CASE("per-state gamma is the worst row") {
    auto g = GridMap::parse_string("3 3\n...\n.G.\n...\n");
    std::map<std::size_t, UcRow> rows;
    rows[0] = UcRow{0.1, 0, 0, 0, 0, 0, 0, 0};
    rows[2] = UcRow{0.05, 0.05, 0.05, 0.05, 0, 0, 0, 0};
    const auto nav = build_2d(g, UncertaintyModel::per_state_rows(rows));
    CHECK(gamma_of(nav) == doctest::Approx(0.8));
}

TEST_CASE("state counts") {
    GridMap g(40, 40);
    g.set_goals({{20, 20}});
    CHECK(build_2d(g, UncertaintyModel::none_model()).size() == 1601);
    CHECK(build_heading(g, 24, 45.0, UncertaintyModel::none_model()).size() == 38401);
    CHECK(history_state_bound(40, 40) == 2560000);
    CHECK(8 * 24 + 24 == 216);
}

TEST_CASE("heading model") {
    auto g = GridMap::parse_string("7 7\n.......\n.......\n.......\n...G...\n.......\n.......\n.......\n");
    const auto nav = build_heading(g, 24, 45.0, UncertaintyModel::none_model());
    CHECK(nav.controllable_event_count() == 7);
    for (StateId s = 0; s < nav.size(); ++s) {
        if (nav.is_obstacle(s)) continue;
        const auto succ = nav.controllable_successors(s);
        CHECK(succ.size() <= 7);
        // Every controllable move advances to an adjacent cell and turns by at most 3 steps.
        for (const auto& [e, t] : succ) {
            if (t == nav.deadlock) continue;
            CHECK(direction_between(nav.xi[s].cell, nav.xi[t].cell).has_value());
            const int dh = ((nav.xi[t].heading - nav.xi[s].heading) % 24 + 24) % 24;
            CHECK((dh <= 3 || dh >= 21));
        }
    }
    // Goal set spans every heading unless one is requested.
    CHECK(nav.goal_states.size() == 24);
    g.set_goal_heading(6);
    CHECK(build_heading(g, 24, 45.0, UncertaintyModel::none_model()).goal_states.size() == 1);

    // No reverse moves: heading east never lands west.
    const auto east = *nav.state_of({3, 1}, 0);
    for (const auto& [e, t] : nav.controllable_successors(east)) CHECK(nav.xi[t].cell.col == 2);

    CHECK_THROWS_AS(build_heading(g, 7, 45.0, UncertaintyModel::none_model()), PreconditionError);
    CHECK_THROWS_AS(build_heading(g, 24, 40.0, UncertaintyModel::none_model()), PreconditionError);
}

TEST_CASE("heading model in-place turn uncertainty") {
    auto g = GridMap::parse_string("3 3\n...\n.G.\n...\n");
    auto unc = UncertaintyModel::averaged_row(UcRow{}, 0.1);
    const auto nav = build_heading(g, 8, 45.0, unc);
    const auto s = *nav.state_of({0, 0}, 2);
    int turns = 0;
    for (const auto& t : nav.pfsa.row(s))
        if (!t.controllable) {
            CHECK(nav.xi[t.dst].cell == Cell{0, 0});
            ++turns;
        }
    CHECK(turns == 2);
    CHECK(row_total(nav.pfsa, s) == doctest::Approx(1.0));
}

TEST_CASE("history model merges back to the planar model") {
    const auto g = testing::random_maze(6, 7, 0.2, 4);
    SUBCASE("identical rows") {
        UcRow row{0.01, 0.02, 0.03, 0.0, 0.01, 0.02, 0.0, 0.01};
        const auto hist = build_history(g, uniform_table(row));
        const auto merged = merge_history(hist);
        const auto flat = build_2d(g, UncertaintyModel::averaged_row(row));
        CHECK(merged.pfsa == flat.pfsa);
        CHECK(merged.goal_states == flat.goal_states);
        CHECK(merged.obstacle_states == flat.obstacle_states);
    }
    SUBCASE("forward biased rows average to the planar row") {
        const auto table = forward_biased_table(0.1, 0.6);
        for (int inc = 0; inc < 8; ++inc)
            for (int d = 0; d < 8; ++d)
                if (d != inc) CHECK(table[inc][inc] > table[inc][d]);
        const auto merged = merge_history(build_history(g, table));
        const auto flat = build_2d(g, UncertaintyModel::averaged_row(average_row(table)));
        REQUIRE(merged.size() == flat.size());
        for (StateId s = 0; s < flat.size(); ++s) {
            const auto a = merged.pfsa.row(s), b = flat.pfsa.row(s);
            REQUIRE(a.size() == b.size());
            for (std::size_t k = 0; k < a.size(); ++k) {
                CHECK(a[k].event == b[k].event);
                CHECK(a[k].dst == b[k].dst);
                CHECK(a[k].prob == doctest::Approx(b[k].prob).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("obstacles absorb into the deadlock state") {
    const auto nav = build_2d(testing::random_maze(8, 8, 0.3, 9), UncertaintyModel::uniform(0.8));
    for (auto o : nav.obstacle_states) {
        for (const auto& t : nav.pfsa.row(o)) CHECK(t.dst == nav.deadlock);
    }
}

TEST_CASE("supervised plant at gamma = 1 never enables a path into obstacles") {
    const auto nav = build_2d(testing::random_maze(8, 8, 0.25, 12), UncertaintyModel::none_model());
    const auto r = optimize(nav.pfsa);
    const auto sup = apply_disabling(nav.pfsa, r.disabled);
    for (StateId q = 0; q < nav.size(); ++q) {
        if (nav.is_obstacle(q)) continue;
        std::vector<char> seen(nav.size(), 0);
        std::deque<StateId> queue{q};
        seen[q] = 1;
        while (!queue.empty()) {
            const auto s = queue.front();
            queue.pop_front();
            CHECK_FALSE(nav.is_obstacle(s));
            for (const auto& t : sup.row(s))
                if (!seen[t.dst]) seen[t.dst] = 1, queue.push_back(t.dst);
        }
    }
}

TEST_CASE("uncertainty file parsing") {
    std::istringstream in("# averaged\nuc N 0.02\nuc SE 0.01\n");
    const auto m = parse_uncertainty(in, 5);
    CHECK(m.mode == UncertaintyMode::averaged);
    CHECK(m.gamma() == doctest::Approx(0.97));

    std::istringstream ps("uc_state 2,3 E 0.1\nuc_state 4 W 0.2\n");
    const auto p = parse_uncertainty(ps, 5);
    CHECK(p.mode == UncertaintyMode::per_state);
    CHECK(p.row_for(13)[0] == doctest::Approx(0.1));
    CHECK(p.row_for(4)[4] == doctest::Approx(0.2));
    CHECK(p.gamma() == doctest::Approx(0.8));

    std::istringstream bad("uc X 0.1\n");
    CHECK_THROWS_AS(parse_uncertainty(bad, 5), ParseError);
    std::istringstream heavy("uc N 0.6\nuc S 0.6\n");
    CHECK_THROWS_AS(parse_uncertainty(heavy, 5), std::exception);

    std::ostringstream out;
    write_uncertainty(out, m);
    std::istringstream back(out.str());
    const auto again = parse_uncertainty(back, 5);
    CHECK(again.averaged == m.averaged);
}

TEST_CASE("model names") {
    for (auto k : {ModelKind::planar, ModelKind::heading, ModelKind::history})
        CHECK(parse_model(model_name(k)) == k);
    CHECK_FALSE(parse_model("3d"));
}
