#include "nustar/nav_model.hpp"

#include <algorithm>
#include <cmath>

#include "nustar/errors.hpp"

namespace nustar {

std::string_view model_name(ModelKind k) {
    switch (k) {
        case ModelKind::planar: return "2d";
        case ModelKind::heading: return "heading";
        case ModelKind::history: return "history";
    }
    return "?";
}

std::optional<ModelKind> parse_model(std::string_view name) {
    if (name == "2d") return ModelKind::planar;
    if (name == "heading") return ModelKind::heading;
    if (name == "history") return ModelKind::history;
    return std::nullopt;
}

void NavAutomaton::finalize() {
    goal_flag_.assign(size(), 0);
    obstacle_flag_.assign(size(), 0);
    for (auto g : goal_states) goal_flag_.at(g) = 1;
    for (auto o : obstacle_states) obstacle_flag_.at(o) = 1;
}

std::vector<StateId> NavAutomaton::states_at(Cell c) const {
    std::vector<StateId> out;
    if (!grid.in_bounds(c)) return out;
    const auto idx = grid.index(c);
    switch (kind) {
        case ModelKind::planar: out.push_back(static_cast<StateId>(idx)); break;
        case ModelKind::heading:
            for (int h = 0; h < headings; ++h) out.push_back(static_cast<StateId>(idx * headings + h));
            break;
        case ModelKind::history:
            for (int k = 0; k < 9; ++k) out.push_back(static_cast<StateId>(idx * 9 + k));
            break;
    }
    return out;
}

std::optional<StateId> NavAutomaton::state_of(Cell c, int heading, int incoming) const {
    if (!grid.in_bounds(c)) return std::nullopt;
    const auto idx = grid.index(c);
    switch (kind) {
        case ModelKind::planar: return static_cast<StateId>(idx);
        case ModelKind::heading:
            if (heading < 0 || heading >= headings) return std::nullopt;
            return static_cast<StateId>(idx * headings + heading);
        case ModelKind::history: {
            const int k = incoming < 0 ? kRest : incoming;
            if (k > kRest) return std::nullopt;
            return static_cast<StateId>(idx * 9 + k);
        }
    }
    return std::nullopt;
}

std::vector<std::pair<EventId, StateId>> NavAutomaton::controllable_successors(StateId q) const {
    std::vector<std::pair<EventId, StateId>> out;
    for (const auto& t : pfsa.row(q))
        if (events[t.event].kind == EventKind::controllable) out.emplace_back(t.event, t.dst);
    return out;
}

std::size_t NavAutomaton::controllable_event_count() const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [](const EventInfo& e) { return e.kind == EventKind::controllable; }));
}

double NavAutomaton::chi_goal() const {
    double v = 0.0;
    for (auto g : goal_states) v = std::max(v, pfsa.chi()[g]);
    return v;
}

namespace {

void check_inputs(const GridMap& grid, double chi_goal) {
    grid.validate();
    if (!(chi_goal > 0.0)) throw PreconditionError("goal characteristic weight must be positive");
}

std::vector<EventInfo> move_events() {
    std::vector<EventInfo> ev;
    for (int d = 0; d < 8; ++d) ev.push_back({"c" + std::string(kDirNames[d]), EventKind::controllable, d, 0});
    for (int d = 0; d < 8; ++d) ev.push_back({"u" + std::string(kDirNames[d]), EventKind::uncontrollable, d, 0});
    ev.push_back({"u", EventKind::collision, -1, 0});
    return ev;
}

// Row for an unblocked, non-goal state: controllable share plus uc twins.
template <class Target>
void fill_row(std::vector<Transition>& row, int controllable_count, EventId first_ctrl, const UcRow& uc,
              EventId first_uc, Target&& target) {
    const double ctrl = (1.0 - row_sum(uc)) / controllable_count;
    for (int k = 0; k < controllable_count; ++k) row.push_back({first_ctrl + k, target(true, k), ctrl, true});
    for (int d = 0; d < 8; ++d)
        if (uc[d] > 0.0) row.push_back({first_uc + d, target(false, d), uc[d], false});
}

}  // namespace

NavAutomaton build_2d(const GridMap& grid, const UncertaintyModel& unc, double chi_goal) {
    check_inputs(grid, chi_goal);
    unc.validate();
    NavAutomaton nav;
    nav.kind = ModelKind::planar;
    nav.grid = grid;
    nav.events = move_events();
    const auto cells = grid.cell_count();
    const auto n = cells + 1;
    nav.deadlock = static_cast<StateId>(cells);
    nav.xi.resize(n);
    std::vector<std::vector<Transition>> rows(n);
    std::vector<double> chi(n, 0.0);
    const EventId u = 16;
    for (std::size_t i = 0; i < cells; ++i) {
        const Cell c = grid.cell(i);
        nav.xi[i].cell = c;
        auto neighbor = [&](int d) -> StateId {
            const Cell x = step(c, d);
            return grid.in_bounds(x) ? static_cast<StateId>(grid.index(x)) : nav.deadlock;
        };
        if (grid.blocked(c)) {
            rows[i].push_back({u, nav.deadlock, 1.0, false});
            nav.obstacle_states.push_back(static_cast<StateId>(i));
        } else if (grid.is_goal(c)) {
            fill_row(rows[i], 8, 0, UcRow{}, 8, [&](bool, int d) { return neighbor(d); });
            nav.goal_states.push_back(static_cast<StateId>(i));
            chi[i] = chi_goal;
        } else {
            fill_row(rows[i], 8, 0, unc.row_for(i), 8, [&](bool, int d) { return neighbor(d); });
        }
    }
    rows[nav.deadlock].push_back({u, nav.deadlock, 1.0, false});
    chi[nav.deadlock] = -1.0;
    nav.obstacle_states.push_back(nav.deadlock);
    nav.pfsa = Pfsa(n, nav.events.size(), std::move(rows), std::move(chi));
    nav.finalize();
    return nav;
}

NavAutomaton build_heading(const GridMap& grid, int headings, double max_turn_degrees, const UncertaintyModel& unc,
                           double chi_goal) {
    check_inputs(grid, chi_goal);
    unc.validate();
    if (headings <= 0 || 360 % headings != 0) throw PreconditionError("heading count must divide 360");
    const double stepdeg = 360.0 / headings;
    const double turns = max_turn_degrees / stepdeg;
    const int m = static_cast<int>(std::lround(turns));
    if (max_turn_degrees < 0 || std::abs(turns - m) > 1e-9 || 2 * m + 1 > headings)
        throw PreconditionError("max turn must be a non-negative multiple of the heading step below 180 degrees");
    if (grid.goal_heading() && (*grid.goal_heading() < 0 || *grid.goal_heading() >= headings))
        throw PreconditionError("goal heading out of range");

    NavAutomaton nav;
    nav.kind = ModelKind::heading;
    nav.grid = grid;
    nav.headings = headings;
    nav.max_turn_steps = m;
    const int nctrl = 2 * m + 1;
    for (int k = -m; k <= m; ++k)
        nav.events.push_back({"f" + std::string(k < 0 ? "" : "+") + std::to_string(k), EventKind::controllable, -1, k});
    for (int d = 0; d < 8; ++d) nav.events.push_back({"u" + std::string(kDirNames[d]), EventKind::uncontrollable, d, 0});
    nav.events.push_back({"uL", EventKind::uncontrollable, -1, 1});
    nav.events.push_back({"uR", EventKind::uncontrollable, -1, -1});
    nav.events.push_back({"u", EventKind::collision, -1, 0});
    const EventId first_uc = static_cast<EventId>(nctrl);
    const EventId turn_left = first_uc + 8, turn_right = first_uc + 9, u = first_uc + 10;

    const auto cells = grid.cell_count();
    const auto n = cells * headings + 1;
    nav.deadlock = static_cast<StateId>(n - 1);
    nav.xi.resize(n);
    std::vector<std::vector<Transition>> rows(n);
    std::vector<double> chi(n, 0.0);
    auto sid = [&](Cell c, int h) -> StateId {
        if (!grid.in_bounds(c)) return nav.deadlock;
        return static_cast<StateId>(grid.index(c) * headings + ((h % headings) + headings) % headings);
    };
    for (std::size_t i = 0; i < cells; ++i) {
        const Cell c = grid.cell(i);
        for (int h = 0; h < headings; ++h) {
            const StateId s = sid(c, h);
            nav.xi[s] = {c, h, -1};
            const int compass = static_cast<int>(std::floor(h * stepdeg / 45.0 + 0.5)) % 8;
            const bool goal = grid.is_goal(c) && (!grid.goal_heading() || *grid.goal_heading() == h);
            auto target = [&](bool ctrl, int k) {
                return ctrl ? sid(step(c, compass), h + (k - m)) : sid(step(c, k), h);
            };
            if (grid.blocked(c)) {
                rows[s].push_back({u, nav.deadlock, 1.0, false});
                nav.obstacle_states.push_back(s);
                continue;
            }
            if (goal) {
                fill_row(rows[s], nctrl, 0, UcRow{}, first_uc, target);
                nav.goal_states.push_back(s);
                chi[s] = chi_goal;
                continue;
            }
            const UcRow uc = unc.row_for(i);
            const double turn = unc.turn_for(i);
            fill_row(rows[s], nctrl, 0, uc, first_uc, target);
            if (turn > 0.0) {
                for (auto& t : rows[s])
                    if (t.controllable) t.prob = (1.0 - row_sum(uc) - turn) / nctrl;
                rows[s].push_back({turn_left, sid(c, h + 1), turn / 2, false});
                rows[s].push_back({turn_right, sid(c, h - 1), turn / 2, false});
            }
        }
    }
    rows[nav.deadlock].push_back({u, nav.deadlock, 1.0, false});
    chi[nav.deadlock] = -1.0;
    nav.obstacle_states.push_back(nav.deadlock);
    nav.pfsa = Pfsa(n, nav.events.size(), std::move(rows), std::move(chi));
    nav.finalize();
    return nav;
}

NavAutomaton build_history(const GridMap& grid, const ContourTable& table, double chi_goal) {
    check_inputs(grid, chi_goal);
    UncertaintyModel check;
    check.history = table;
    check.validate();

    NavAutomaton nav;
    nav.kind = ModelKind::history;
    nav.grid = grid;
    nav.events = move_events();
    const auto cells = grid.cell_count();
    const auto n = cells * 9 + 1;
    nav.deadlock = static_cast<StateId>(n - 1);
    nav.xi.resize(n);
    std::vector<std::vector<Transition>> rows(n);
    std::vector<double> chi(n, 0.0);
    const EventId u = 16;
    for (std::size_t i = 0; i < cells; ++i) {
        const Cell c = grid.cell(i);
        auto target = [&](bool, int d) -> StateId {
            const Cell x = step(c, d);
            return grid.in_bounds(x) ? static_cast<StateId>(grid.index(x) * 9 + d) : nav.deadlock;
        };
        for (int inc = 0; inc < 9; ++inc) {
            const auto s = static_cast<StateId>(i * 9 + inc);
            nav.xi[s] = {c, -1, inc};
            if (grid.blocked(c)) {
                rows[s].push_back({u, nav.deadlock, 1.0, false});
                nav.obstacle_states.push_back(s);
            } else if (grid.is_goal(c)) {
                fill_row(rows[s], 8, 0, UcRow{}, 8, target);
                nav.goal_states.push_back(s);
                chi[s] = chi_goal;
            } else {
                fill_row(rows[s], 8, 0, table[inc], 8, target);
            }
        }
    }
    rows[nav.deadlock].push_back({u, nav.deadlock, 1.0, false});
    chi[nav.deadlock] = -1.0;
    nav.obstacle_states.push_back(nav.deadlock);
    nav.pfsa = Pfsa(n, nav.events.size(), std::move(rows), std::move(chi));
    nav.finalize();
    return nav;
}

NavAutomaton merge_history(const NavAutomaton& h) {
    if (h.kind != ModelKind::history) throw PreconditionError("merge_history needs a history model");
    const auto cells = h.grid.cell_count();
    const auto n = cells + 1;
    auto merged_state = [&](StateId s) -> StateId {
        return s == h.deadlock ? static_cast<StateId>(cells) : static_cast<StateId>(s / 9);
    };
    NavAutomaton out;
    out.kind = ModelKind::planar;
    out.grid = h.grid;
    out.events = h.events;
    out.deadlock = static_cast<StateId>(cells);
    out.xi.resize(n);
    std::vector<std::vector<Transition>> rows(n);
    std::vector<double> chi(n, 0.0);
    const auto nev = h.events.size();
    for (std::size_t i = 0; i < cells; ++i) {
        out.xi[i].cell = h.grid.cell(i);
        std::vector<std::vector<double>> probs(nev);
        std::vector<StateId> dst(nev, 0);
        std::vector<char> ctrl(nev, 0), seen(nev, 0);
        for (int inc = 0; inc < 9; ++inc) {
            const auto s = static_cast<StateId>(i * 9 + inc);
            for (const auto& t : h.pfsa.row(s)) {
                probs[t.event].resize(9, 0.0);
                probs[t.event][inc] = t.prob;
                dst[t.event] = merged_state(t.dst);
                ctrl[t.event] = t.controllable;
                seen[t.event] = 1;
            }
        }
        for (EventId e = 0; e < nev; ++e) {
            if (!seen[e]) continue;
            const auto& p = probs[e];
            const bool same = std::all_of(p.begin(), p.end(), [&](double v) { return v == p[0]; });
            double mean = p[0];
            if (!same) {
                mean = 0.0;
                for (double v : p) mean += v;
                mean /= 9.0;
            }
            rows[i].push_back({e, dst[e], mean, ctrl[e] != 0});
        }
        chi[i] = h.pfsa.chi()[i * 9];
    }
    rows[out.deadlock] = {h.pfsa.row(h.deadlock).begin(), h.pfsa.row(h.deadlock).end()};
    rows[out.deadlock][0].dst = out.deadlock;
    chi[out.deadlock] = h.pfsa.chi()[h.deadlock];
    for (std::size_t i = 0; i < cells; ++i) {
        const Cell c = h.grid.cell(i);
        if (h.grid.blocked(c)) out.obstacle_states.push_back(static_cast<StateId>(i));
        else if (h.grid.is_goal(c)) out.goal_states.push_back(static_cast<StateId>(i));
    }
    out.obstacle_states.push_back(out.deadlock);
    out.pfsa = Pfsa(n, nev, std::move(rows), std::move(chi));
    out.finalize();
    return out;
}

double gamma_of(const NavAutomaton& nav) {
    double worst = 0.0;
    for (StateId s = 0; s < nav.size(); ++s) {
        double sum = 0.0;
        for (const auto& t : nav.pfsa.row(s))
            if (nav.events[t.event].kind == EventKind::uncontrollable) sum += t.prob;
        worst = std::max(worst, sum);
    }
    return 1.0 - worst;
}

std::size_t history_state_bound(int rows, int cols) {
    const auto cells = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    return cells * cells;
}

NavAutomaton with_pfsa(const NavAutomaton& nav, Pfsa pfsa) {
    if (pfsa.state_count() != nav.size() || pfsa.event_count() != nav.events.size())
        throw PreconditionError("replacement plant does not match the navigation automaton");
    NavAutomaton out = nav;
    out.pfsa = std::move(pfsa);
    return out;
}

}  // namespace nustar
