#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace nustar {

using StateId = std::uint32_t;
using EventId = std::uint32_t;

struct Transition {
    EventId event;
    StateId dst;
    double prob;
    bool controllable;  // (src, event) belongs to the controllable set
};

// (state, event) pair.
struct Arc {
    StateId state;
    EventId event;
    auto operator<=>(const Arc&) const = default;
};

using ArcSet = std::set<Arc>;

// Probabilistic finite state automaton. Rows are kept sorted by event id; at
// most one transition per (state, event).
class Pfsa {
public:
    Pfsa() = default;
    Pfsa(std::size_t states, std::size_t events, std::vector<std::vector<Transition>> rows,
         std::vector<double> chi);

    std::size_t state_count() const noexcept { return rows_.size(); }
    std::size_t event_count() const noexcept { return events_; }
    std::span<const Transition> row(StateId s) const { return rows_.at(s); }
    const std::vector<double>& chi() const noexcept { return chi_; }
    Eigen::VectorXd chi_vector() const;

    const Transition* find(StateId s, EventId e) const;
    bool is_controllable(StateId s, EventId e) const;
    // Controllable set in (state, event) order.
    std::vector<Arc> controllable_arcs() const;
    std::size_t controllable_count() const;

    Pfsa with_chi(std::vector<double> chi) const;
    Pfsa with_rows(std::vector<std::vector<Transition>> rows) const;

    bool operator==(const Pfsa&) const;

private:
    void validate() const;

    std::size_t events_ = 0;
    std::vector<std::vector<Transition>> rows_;
    std::vector<double> chi_;
};

bool operator==(const Transition& a, const Transition& b);

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct TransitionMatrix {
    SparseRowMatrix pi;
    std::size_t size() const { return static_cast<std::size_t>(pi.rows()); }
};

struct MeasureVector {
    Eigen::VectorXd values;
    double theta = 0.0;
};

struct SolverOptions {
    std::size_t direct_threshold = 5000;  // n below this uses sparse LU
    double residual_tol = 1e-10;          // relative to ||chi||_inf
    int max_iterations = 5000;
};

TransitionMatrix transition_matrix(const Pfsa& pfsa);
TransitionMatrix transition_matrix(const Pfsa& pfsa, const ArcSet& disabled);

MeasureVector renormalized_measure(const TransitionMatrix& pi, const Eigen::VectorXd& chi, double theta,
                                   const SolverOptions& options = {});

double string_measure(const Pfsa& pfsa, StateId start, std::span<const EventId> word, double theta);

Pfsa apply_disabling(const Pfsa& pfsa, const ArcSet& disabled);

// Text form: "pfsa n l", transition lines "src event dst prob ctrl|unctrl",
// "chi i value" lines, and an optional "disabled" section of "state event".
void write_pfsa(std::ostream& out, const Pfsa& pfsa, const ArcSet* disabled = nullptr);
std::string format_pfsa(const Pfsa& pfsa, const ArcSet* disabled = nullptr);

struct ParsedPfsa {
    Pfsa pfsa;
    ArcSet disabled;
};
ParsedPfsa read_pfsa(std::istream& in, const std::string& source = "<pfsa>");
ParsedPfsa parse_pfsa(const std::string& text);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace nustar
