#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nustar/errors.hpp"
#include "nustar/simulator.hpp"
#include "nustar/uncertainty_id.hpp"

namespace nustar::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double number(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(d))
        throw PreconditionError("bad value for " + key + ": '" + v + "'");
    return d;
}

std::size_t count(const std::string& key, const std::string& v) {
    const double d = number(key, v);
    if (d < 0 || d != std::floor(d)) throw PreconditionError(key + " must be a non-negative integer");
    return static_cast<std::size_t>(d);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw PreconditionError("cannot write " + path);
    return f;
}

// Lexically shortest round-trip representation keeps CSV output byte-stable.
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kExitError;
}

}  // namespace

std::pair<Cell, std::optional<int>> parse_pose(const std::string& text) {
    std::vector<std::string> parts;
    std::istringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) parts.push_back(trim(p));
    if (parts.size() != 2 && parts.size() != 3) throw PreconditionError("expected r,c[,h], got '" + text + "'");
    std::vector<int> v;
    for (const auto& p : parts) {
        const double d = number("cell", p);
        if (d != std::floor(d) || d < 0) throw PreconditionError("expected non-negative integers in '" + text + "'");
        v.push_back(static_cast<int>(d));
    }
    std::optional<int> h;
    if (v.size() == 3) h = v[2];
    return {Cell{v[0], v[1]}, h};
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) {
        p = trim(p);
        if (!p.empty()) out.push_back(number("list", p));
    }
    return out;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string v = trim(raw_value);
    if (key == "model") {
        const auto m = parse_model(v);
        if (!m) throw PreconditionError("unknown model '" + v + "' (2d, heading, history)");
        c.model = *m;
    } else if (key == "map") {
        c.map = v;
    } else if (key == "gamma") {
        c.gamma = number(key, v);
    } else if (key == "uncertainty_file") {
        c.uncertainty_file = v;
    } else if (key == "contour") {
        c.contour = v;
    } else if (key == "beta") {
        c.beta = number(key, v);
    } else if (key == "theta_floor") {
        c.theta_floor = number(key, v);
    } else if (key == "seed") {
        c.seed = count(key, v);
    } else if (key == "runs") {
        c.runs = count(key, v);
    } else if (key == "start") {
        auto [cell, h] = parse_pose(v);
        c.start = cell;
        c.start_heading = h;
    } else if (key == "goal") {
        auto [cell, h] = parse_pose(v);
        c.goal = cell;
        c.goal_heading = h;
    } else if (key == "headings") {
        c.headings = static_cast<int>(count(key, v));
    } else if (key == "max_turn") {
        c.max_turn = number(key, v);
    } else if (key == "chi_goal") {
        c.chi_goal = number(key, v);
    } else if (key == "samples") {
        c.samples = count(key, v);
    } else if (key == "max_truncated") {
        c.max_truncated = number(key, v);
    } else if (key == "gammas") {
        c.gammas = parse_list(v);
    } else if (key == "log") {
        c.log = v;
    } else if (key == "cell_size") {
        c.cell_size = number(key, v);
    } else if (key == "interval") {
        c.interval = count(key, v);
    } else if (key == "max_shift") {
        c.max_shift = count(key, v);
    } else if (key == "out") {
        c.out = v;
    } else if (key == "svg") {
        c.svg = v;
    } else if (key == "trace") {
        c.trace = v;
    } else {
        throw PreconditionError("unknown setting '" + raw_key + "'");
    }
}

void apply_config_text(RunConfig& config, std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
        try {
            apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const PreconditionError& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
}

void load_config(RunConfig& config, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, 0, "cannot open config file");
    apply_config_text(config, f, path);
}

void RunConfig::validate() const {
    const int sources = (gamma ? 1 : 0) + (uncertainty_file.empty() ? 0 : 1) + (contour.empty() ? 0 : 1);
    if (sources > 1) throw PreconditionError("give only one of gamma, uncertainty-file, contour");
    if (gamma && !(*gamma > 0.0 && *gamma <= 1.0)) throw PreconditionError("gamma must lie in (0,1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw PreconditionError("beta must lie in [0,1]");
    if (!(theta_floor > 0.0 && theta_floor < 1.0)) throw PreconditionError("theta floor must lie in (0,1)");
    if (!(chi_goal > 0.0)) throw PreconditionError("chi-goal must be positive");
    if (!(max_truncated >= 0.0 && max_truncated < 1.0)) throw PreconditionError("max-truncated must lie in [0,1)");
    if (!(cell_size > 0.0)) throw PreconditionError("cell size must be positive");
    for (double g : gammas)
        if (!(g > 0.0 && g <= 1.0)) throw PreconditionError("gamma values must lie in (0,1]");
}

UncertaintyModel uncertainty_of(const RunConfig& config, int cols) {
    if (!config.uncertainty_file.empty()) return load_uncertainty(config.uncertainty_file, cols);
    if (!config.contour.empty()) {
        const auto contour = load_contour(config.contour);
        IntegrationOptions io;
        io.samples = config.samples;
        io.max_truncated = config.max_truncated;
        io.seed = config.seed;
        return UncertaintyModel::averaged_row(cell_uncontrollable_probabilities(contour, io).neighbor);
    }
    if (config.gamma) return UncertaintyModel::uniform(*config.gamma);
    return UncertaintyModel::none_model();
}

NavAutomaton build_model(const RunConfig& config) {
    config.validate();
    if (config.map.empty()) throw PreconditionError("no map given");
    if (!std::filesystem::exists(config.map)) throw PreconditionError("map file not found: " + config.map);
    GridMap grid = GridMap::load(config.map);
    if (config.goal) {
        grid.set_goals({*config.goal});
        grid.set_goal_heading(config.goal_heading);
    }
    if (config.start) grid.set_start(config.start);
    grid.validate();
    const auto unc = uncertainty_of(config, grid.cols());
    switch (config.model) {
        case ModelKind::planar:
            return build_2d(grid, unc, config.chi_goal);
        case ModelKind::heading:
            return build_heading(grid, config.headings, config.max_turn, unc, config.chi_goal);
        case ModelKind::history: {
            if (unc.mode == UncertaintyMode::per_state)
                throw PreconditionError("the history model takes direction-conditioned rows, not per-state rows");
            const ContourTable table = unc.history ? *unc.history : uniform_table(unc.row_for(0));
            return build_history(grid, table, config.chi_goal);
        }
    }
    throw PreconditionError("unknown model");
}

PlannerOptions planner_options(const RunConfig& config) {
    PlannerOptions o;
    o.supervisor.theta.floor = config.theta_floor;
    return o;
}

StateId start_state(const NavAutomaton& nav, const RunConfig& config) {
    const auto cell = config.start ? config.start : nav.grid.start();
    if (!cell) throw PreconditionError("no start cell (use --start or an S in the map)");
    if (!nav.grid.in_bounds(*cell)) throw PreconditionError("start cell outside the map");
    std::optional<StateId> q;
    switch (nav.kind) {
        case ModelKind::planar:
            q = nav.state_of(*cell);
            break;
        case ModelKind::heading:
            q = nav.state_of(*cell, config.start_heading.value_or(0));
            break;
        case ModelKind::history:
            q = nav.state_of(*cell, -1, config.start_heading.value_or(kRest));
            break;
    }
    if (!q) throw PreconditionError("start pose has no state in this model");
    return *q;
}

void write_plan_csv(std::ostream& out, const NavAutomaton& nav, const AssembledPlan& plan, double beta) {
    const bool extra = nav.kind != ModelKind::planar;
    out << "row,col" << (nav.kind == ModelKind::heading ? ",heading" : nav.kind == ModelKind::history ? ",incoming" : "")
        << ",measure,best_next_row,best_next_col\n";
    for (StateId q = 0; q < nav.size(); ++q) {
        if (q == nav.deadlock) continue;
        const auto& fp = nav.xi[q];
        out << fp.cell.row << ',' << fp.cell.col;
        if (extra) out << ',' << (nav.kind == ModelKind::heading ? fp.heading : fp.incoming);
        out << ',' << num(plan.field[q]);
        Cell next{-1, -1};
        if (!plan.goal[q] && !nav.is_obstacle(q) && !improving_states(plan, nav, q).empty())
            next = nav.xi[select_move(plan, nav, q, std::nullopt, beta)].cell;
        out << ',' << next.row << ',' << next.col << '\n';
    }
}

void write_plan_svg(std::ostream& out, const NavAutomaton& nav, const AssembledPlan& plan, double beta) {
    constexpr int px = 16;
    const auto& g = nav.grid;
    // Best state per cell; the field is shown on a log scale.
    std::vector<std::optional<StateId>> best(g.cell_count());
    for (StateId q = 0; q < nav.size(); ++q) {
        if (q == nav.deadlock) continue;
        auto& b = best[g.index(nav.xi[q].cell)];
        if (!b || plan.field[q] > plan.field[*b]) b = q;
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (StateId q = 0; q < nav.size(); ++q)
        if (plan.field[q] > 0.0) {
            lo = std::min(lo, std::log(plan.field[q]));
            hi = std::max(hi, std::log(plan.field[q]));
        }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g.cols() * px << "\" height=\"" << g.rows() * px
        << "\">\n";
    out << "<defs><marker id=\"a\" markerWidth=\"4\" markerHeight=\"4\" refX=\"2\" refY=\"2\" orient=\"auto\">"
           "<path d=\"M0,0 L4,2 L0,4 z\" fill=\"#000\"/></marker></defs>\n";
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        const Cell c = g.cell(i);
        std::string fill = "#202020";
        if (g.blocked(c)) {
            fill = "#000000";
        } else if (best[i] && plan.field[*best[i]] > 0.0) {
            const double t = hi > lo ? (std::log(plan.field[*best[i]]) - lo) / (hi - lo) : 1.0;
            const int r = static_cast<int>(std::lround(40 + 215 * t));
            const int gg = static_cast<int>(std::lround(60 + 160 * t));
            const int b = static_cast<int>(std::lround(160 - 130 * t));
            std::ostringstream os;
            os << '#' << std::hex << std::setfill('0') << std::setw(2) << r << std::setw(2) << gg << std::setw(2) << b;
            fill = os.str();
        } else {
            fill = "#606060";
        }
        if (g.is_goal(c)) fill = "#ffffff";
        out << "<rect x=\"" << c.col * px << "\" y=\"" << c.row * px << "\" width=\"" << px << "\" height=\"" << px
            << "\" fill=\"" << fill << "\"/>\n";
    }
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        if (!best[i]) continue;
        const StateId q = *best[i];
        if (plan.goal[q] || nav.is_obstacle(q) || improving_states(plan, nav, q).empty()) continue;
        const Cell a = nav.xi[q].cell, b = nav.xi[select_move(plan, nav, q, std::nullopt, beta)].cell;
        if (a == b) continue;
        const double x0 = (a.col + 0.5) * px, y0 = (a.row + 0.5) * px;
        const double x1 = x0 + 0.35 * px * (b.col - a.col), y1 = y0 + 0.35 * px * (b.row - a.row);
        out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y1)
            << "\" stroke=\"#000\" stroke-width=\"1\" marker-end=\"url(#a)\"/>\n";
    }
    out << "</svg>\n";
}

int cmd_plan(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto nav = build_model(config);
        const auto stack = recursive_plan(nav, planner_options(config));
        const auto plan = assemble(stack);
        std::size_t feasible_count = 0, feasible_non_goal = 0;
        for (StateId q = 0; q < nav.size(); ++q)
            if (plan.field[q] > 0.0) {
                ++feasible_count;
                if (!plan.goal[q]) ++feasible_non_goal;
            }
        out << "model " << model_name(nav.kind) << ", states " << nav.size() << ", gamma " << num(gamma_of(nav))
            << '\n';
        out << "K " << stack.steps() << '\n';
        for (std::size_t k = 1; k <= stack.steps(); ++k)
            out << "step " << k << " theta_min " << num(stack.theta_min[k]) << " chi_goal " << num(stack.chi_goal[k])
                << " iterations " << stack.supervisor_iterations[k] << '\n';
        out << "feasible " << feasible_count << '\n';
        if (!config.out.empty()) {
            auto f = open_out(config.out);
            write_plan_csv(f, nav, plan, config.beta);
        }
        if (!config.svg.empty()) {
            auto f = open_out(config.svg);
            write_plan_svg(f, nav, plan, config.beta);
        }
        if (feasible_non_goal == 0) {
            err << "infeasible: no state outside the goal can reach it\n";
            return kExitInfeasible;
        }
        return kExitOk;
    });
}

int cmd_sweep_gamma(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (config.gammas.empty()) throw PreconditionError("empty gamma list");
        if (config.gamma || !config.uncertainty_file.empty() || !config.contour.empty())
            throw PreconditionError("the sweep sets gamma itself; drop other uncertainty sources");
        std::ostringstream csv;
        csv << "gamma,path_length,p_goal_exact\n";
        bool any_feasible = false;
        for (double g : config.gammas) {
            RunConfig c = config;
            c.gamma = g;
            const auto nav = build_model(c);
            const auto plan = assemble(recursive_plan(nav, planner_options(c)));
            const StateId s = start_state(nav, c);
            double length = std::numeric_limits<double>::quiet_NaN();
            double p = 0.0;
            if (feasible(plan, s)) {
                any_feasible = true;
                length = path_length(nav, gradient_path(plan, nav, s, c.beta));
                p = exact_outcome(nav, plan, s, c.beta).p_goal;
            }
            csv << num(g) << ',' << num(length) << ',' << num(p) << '\n';
        }
        if (config.out.empty()) {
            out << csv.str();
        } else {
            auto f = open_out(config.out);
            f << csv.str();
            out << csv.str();
        }
        if (!any_feasible) {
            err << "infeasible: start cannot reach the goal for any gamma\n";
            return kExitInfeasible;
        }
        return kExitOk;
    });
}

int cmd_identify(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        if (config.log.empty()) throw PreconditionError("no trajectory log given");
        auto log = load_trajectory(config.log);
        log.cell_size = config.cell_size;
        log.interval_length = config.interval;
        DelayOptions dopt;
        dopt.max_shift = config.max_shift;
        const auto hist = identify_histogram(log, dopt);
        const auto contour = DeviationContour::from_histogram(hist, config.cell_size);
        IntegrationOptions io;
        io.samples = config.samples;
        io.max_truncated = config.max_truncated;
        io.seed = config.seed;
        const auto est = cell_uncontrollable_probabilities(contour, io);
        const auto model = UncertaintyModel::averaged_row(est.neighbor);

        const std::filesystem::path dir = config.out.empty() ? std::string(".") : config.out;
        std::filesystem::create_directories(dir);
        {
            auto f = open_out((dir / "histogram.csv").string());
            write_histogram_csv(f, hist);
        }
        {
            auto f = open_out((dir / "delays.csv").string());
            f << "interval,eta\n";
            for (std::size_t k = 0; k < hist.delays.size(); ++k) f << k << ',' << hist.delays[k] << '\n';
        }
        {
            auto f = open_out((dir / "uncertainty.txt").string());
            write_uncertainty(f, model);
        }
        {
            auto f = open_out((dir / "uc_rows.csv").string());
            f << "direction,probability,standard_error\n";
            f << "stay," << num(est.stay) << ',' << num(est.stay_se) << '\n';
            for (int d = 0; d < kDirections; ++d)
                f << kDirNames[d] << ',' << num(est.neighbor[d]) << ',' << num(est.neighbor_se[d]) << '\n';
        }
        out << "intervals " << hist.delays.size() << '\n';
        out << "gamma " << num(model.gamma()) << '\n';
        return kExitOk;
    });
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto nav = build_model(config);
        const auto plan = assemble(recursive_plan(nav, planner_options(config)));
        const StateId s = start_state(nav, config);
        if (config.runs == 0) throw PreconditionError("runs must be positive");
        const auto mc = monte_carlo(nav, plan, s, config.beta, config.runs, config.seed);
        const auto exact = exact_outcome(nav, plan, s, config.beta);
        const double sigma = std::sqrt(exact.p_goal * (1.0 - exact.p_goal) / static_cast<double>(mc.runs));
        out << "p_goal " << num(mc.p_goal) << " (se " << num(mc.se_goal) << ")\n";
        out << "p_obstacle " << num(mc.p_obstacle) << '\n';
        out << "p_step_limit " << num(mc.p_step_limit) << '\n';
        out << "exact_p_goal " << num(exact.p_goal) << '\n';
        out << "exact_p_obstacle " << num(exact.p_obstacle) << '\n';
        out << "psi " << num(exact.p_goal - exact.p_obstacle) << " identity_error "
            << num(std::abs((exact.p_goal - exact.p_obstacle) - (2.0 * exact.p_goal - 1.0))) << '\n';
        const bool agree = std::abs(mc.p_goal - exact.p_goal) <= 3.0 * sigma + 1e-12;
        out << "agreement " << (agree ? "within" : "outside") << " 3 sigma\n";
        if (!config.out.empty()) {
            auto f = open_out(config.out);
            write_outcome_json(f, mc, exact);
        }
        if (!config.trace.empty()) {
            auto f = open_out(config.trace);
            write_trace_csv(f, nav, execute_mission(nav, plan, s, config.beta, config.seed));
        }
        return kExitOk;
    });
}

}  // namespace nustar::cli
