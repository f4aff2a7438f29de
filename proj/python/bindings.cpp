#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nustar/errors.hpp"
#include "nustar/grid_map.hpp"
#include "nustar/nav_model.hpp"
#include "nustar/pfsa.hpp"
#include "nustar/planner.hpp"
#include "nustar/simulator.hpp"
#include "nustar/supervisor.hpp"
#include "nustar/uncertainty_id.hpp"

namespace py = pybind11;
using namespace nustar;

namespace {

GridMap grid_from_text(const std::string& text) { return GridMap::parse_string(text); }

NavAutomaton make_model(const GridMap& grid, const std::string& model, double gamma, int headings, double max_turn) {
    const auto kind = parse_model(model);
    if (!kind) throw PreconditionError("unknown model '" + model + "'");
    const auto unc = gamma >= 1.0 ? UncertaintyModel::none_model() : UncertaintyModel::uniform(gamma);
    switch (*kind) {
        case ModelKind::planar: return build_2d(grid, unc);
        case ModelKind::heading: return build_heading(grid, headings, max_turn, unc);
        case ModelKind::history: return build_history(grid, uniform_table(unc.row_for(0)));
    }
    throw PreconditionError("unknown model");
}

struct Plan {
    NavAutomaton nav;
    AssembledPlan plan;
    PlanStack stack;
};

}  // namespace

PYBIND11_MODULE(_nustar, m) {
    m.doc() = "measure-based supervisory path planning";

    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

    m.def(
        "measure",
        [](const std::string& pfsa_text, double theta) {
            const auto parsed = parse_pfsa(pfsa_text);
            return renormalized_measure(transition_matrix(parsed.pfsa, parsed.disabled), parsed.pfsa.chi_vector(), theta)
                .values;
        },
        py::arg("pfsa_text"), py::arg("theta"), "Renormalized measure of a PFSA in text form.");

    m.def(
        "optimize",
        [](const std::string& pfsa_text) {
            const auto parsed = parse_pfsa(pfsa_text);
            const auto r = optimize(parsed.pfsa);
            py::list disabled;
            for (const auto& a : r.disabled) disabled.append(py::make_tuple(a.state, a.event));
            py::dict d;
            d["nu"] = r.nu_sharp.values;
            d["theta_min"] = r.theta_min;
            d["iterations"] = r.iterations;
            d["disabled"] = disabled;
            return d;
        },
        py::arg("pfsa_text"), "Optimal supervisor of a PFSA in text form.");

    py::class_<Plan>(m, "Plan")
        .def_property_readonly("field", [](const Plan& p) { return p.plan.field; })
        .def_property_readonly("steps", [](const Plan& p) { return p.stack.steps(); })
        .def_property_readonly("theta_min", [](const Plan& p) {
            return std::vector<double>(p.stack.theta_min.begin() + 1, p.stack.theta_min.end());
        })
        .def_property_readonly("states", [](const Plan& p) { return p.nav.size(); })
        .def("state_of", [](const Plan& p, int row, int col) { return p.nav.state_of({row, col}); })
        .def("cell_of", [](const Plan& p, StateId q) { return std::pair{p.nav.xi.at(q).cell.row, p.nav.xi.at(q).cell.col}; })
        .def("feasible", [](const Plan& p, StateId q) { return feasible(p.plan, q); })
        .def(
            "path",
            [](const Plan& p, StateId start, double beta) {
                std::vector<std::pair<int, int>> cells;
                for (auto q : gradient_path(p.plan, p.nav, start, beta)) cells.emplace_back(p.nav.xi[q].cell.row, p.nav.xi[q].cell.col);
                return cells;
            },
            py::arg("start"), py::arg("beta") = 0.0)
        .def(
            "exact_outcome",
            [](const Plan& p, StateId start, double beta) {
                const auto a = exact_outcome(p.nav, p.plan, start, beta);
                return std::pair{a.p_goal, a.p_obstacle};
            },
            py::arg("start"), py::arg("beta") = 0.0)
        .def(
            "simulate",
            [](const Plan& p, StateId start, std::size_t runs, std::uint64_t seed, double beta) {
                const auto e = monte_carlo(p.nav, p.plan, start, beta, runs, seed);
                py::dict d;
                d["p_goal"] = e.p_goal;
                d["p_obstacle"] = e.p_obstacle;
                d["p_step_limit"] = e.p_step_limit;
                d["se_goal"] = e.se_goal;
                return d;
            },
            py::arg("start"), py::arg("runs") = 1000, py::arg("seed") = 1, py::arg("beta") = 0.0);

    m.def(
        "plan",
        [](const std::string& map_text, const std::string& model, double gamma, int headings, double max_turn) {
            Plan p{make_model(grid_from_text(map_text), model, gamma, headings, max_turn), {}, {}};
            p.stack = recursive_plan(p.nav);
            p.plan = assemble(p.stack);
            return p;
        },
        py::arg("map_text"), py::arg("model") = "2d", py::arg("gamma") = 1.0, py::arg("headings") = 8,
        py::arg("max_turn") = 45.0, "Recursive plan on an ASCII occupancy grid.");

    m.def("chi_goal_bound", &chi_goal_bound, py::arg("card_sigma_c"), py::arg("theta_min"), py::arg("gamma"));

    m.def(
        "identify",
        [](const std::string& csv, double cell_size, std::size_t interval, std::size_t max_shift, std::size_t samples,
           std::uint64_t seed, double max_truncated) {
            std::istringstream in(csv);
            auto log = parse_trajectory(in, "<log>");
            log.cell_size = cell_size;
            log.interval_length = interval;
            const auto hist = identify_histogram(log, DelayOptions{max_shift});
            IntegrationOptions io;
            io.samples = samples;
            io.seed = seed;
            io.max_truncated = max_truncated;
            const auto est = cell_uncontrollable_probabilities(DeviationContour::from_histogram(hist, cell_size), io);
            py::dict d;
            d["delays"] = hist.delays;
            d["masses"] = hist.masses;
            d["edges"] = hist.edges;
            d["neighbor"] = est.neighbor;
            d["neighbor_se"] = est.neighbor_se;
            d["gamma"] = 1.0 - est.uncontrollable_mass();
            return d;
        },
        py::arg("csv"), py::arg("cell_size") = 1.0, py::arg("interval") = 200, py::arg("max_shift") = 50,
        py::arg("samples") = 100000, py::arg("seed") = 1, py::arg("max_truncated") = 1e-3, "Uncontrollable probabilities from a trajectory log.");

    m.def(
        "synthesize_log",
        [](double sigma, std::size_t samples, std::size_t lag, std::uint64_t seed) {
            std::ostringstream out;
            write_trajectory_csv(out, synthesize_log(DeviationContour::gaussian(sigma), samples, lag, seed));
            return out.str();
        },
        py::arg("sigma"), py::arg("samples"), py::arg("lag"), py::arg("seed") = 1,
        "Synthetic trajectory CSV with a Gaussian radial deviation.");
}
