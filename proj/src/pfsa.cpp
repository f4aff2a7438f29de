#include "nustar/pfsa.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "nustar/errors.hpp"
#include "nustar/measure_solver.hpp"

namespace nustar {

namespace {

constexpr double kRowTol = 1e-12;

std::string arc_name(StateId s, EventId e) {
    return "(" + std::to_string(s) + ", " + std::to_string(e) + ")";
}

}  // namespace

bool operator==(const Transition& a, const Transition& b) {
    return a.event == b.event && a.dst == b.dst && a.prob == b.prob && a.controllable == b.controllable;
}

Pfsa::Pfsa(std::size_t states, std::size_t events, std::vector<std::vector<Transition>> rows,
           std::vector<double> chi)
    : events_(events), rows_(std::move(rows)), chi_(std::move(chi)) {
    if (states == 0) throw PreconditionError("pfsa needs at least one state");
    if (rows_.size() != states) throw PreconditionError("row count does not match state count");
    for (auto& r : rows_)
        std::sort(r.begin(), r.end(), [](const Transition& a, const Transition& b) { return a.event < b.event; });
    validate();
}

void Pfsa::validate() const {
    const auto n = rows_.size();
    if (chi_.size() != n) throw PreconditionError("chi length does not match state count");
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < rows_[i].size(); ++k) {
            const auto& t = rows_[i][k];
            if (t.event >= events_) throw PreconditionError("event id out of range at state " + std::to_string(i));
            if (t.dst >= n) throw PreconditionError("destination out of range at state " + std::to_string(i));
            if (!(t.prob > 0.0) || t.prob > 1.0)
                throw PreconditionError("transition probability must lie in (0,1] at " + arc_name(i, t.event));
            if (k > 0 && rows_[i][k - 1].event == t.event)
                throw PreconditionError("duplicate event at " + arc_name(i, t.event));
            sum += t.prob;
        }
        if (std::abs(sum - 1.0) > kRowTol)
            throw PreconditionError("event probabilities at state " + std::to_string(i) + " sum to " +
                                    format_double(sum));
        if (!std::isfinite(chi_[i])) throw PreconditionError("chi must be finite");
        if (chi_[i] < -1.0) throw PreconditionError("chi entries must be >= -1");
    }
}

Eigen::VectorXd Pfsa::chi_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(chi_.data(), static_cast<Eigen::Index>(chi_.size()));
}

const Transition* Pfsa::find(StateId s, EventId e) const {
    const auto& r = rows_.at(s);
    auto it = std::lower_bound(r.begin(), r.end(), e, [](const Transition& t, EventId v) { return t.event < v; });
    return (it != r.end() && it->event == e) ? &*it : nullptr;
}

bool Pfsa::is_controllable(StateId s, EventId e) const {
    const auto* t = find(s, e);
    return t && t->controllable;
}

std::vector<Arc> Pfsa::controllable_arcs() const {
    std::vector<Arc> out;
    for (StateId s = 0; s < rows_.size(); ++s)
        for (const auto& t : rows_[s])
            if (t.controllable) out.push_back({s, t.event});
    return out;
}

std::size_t Pfsa::controllable_count() const {
    std::size_t c = 0;
    for (const auto& r : rows_)
        for (const auto& t : r) c += t.controllable ? 1 : 0;
    return c;
}

Pfsa Pfsa::with_chi(std::vector<double> chi) const {
    return Pfsa(rows_.size(), events_, rows_, std::move(chi));
}

Pfsa Pfsa::with_rows(std::vector<std::vector<Transition>> rows) const {
    return Pfsa(rows_.size(), events_, std::move(rows), chi_);
}

bool Pfsa::operator==(const Pfsa& o) const {
    return events_ == o.events_ && rows_ == o.rows_ && chi_ == o.chi_;
}

TransitionMatrix transition_matrix(const Pfsa& pfsa) { return transition_matrix(pfsa, {}); }

TransitionMatrix transition_matrix(const Pfsa& pfsa, const ArcSet& disabled) {
    const auto n = static_cast<Eigen::Index>(pfsa.state_count());
    std::vector<Eigen::Triplet<double>> trips;
    for (StateId s = 0; s < pfsa.state_count(); ++s)
        for (const auto& t : pfsa.row(s)) {
            const bool off = t.controllable && disabled.count({s, t.event});
            trips.emplace_back(s, off ? s : t.dst, t.prob);
        }
    TransitionMatrix tm;
    tm.pi.resize(n, n);
    tm.pi.setFromTriplets(trips.begin(), trips.end());
    tm.pi.makeCompressed();
    return tm;
}

MeasureVector renormalized_measure(const TransitionMatrix& pi, const Eigen::VectorXd& chi, double theta,
                                   const SolverOptions& options) {
    ResolventSolver solver(options);
    return {solver.solve(pi.pi, chi, theta), theta};
}

double string_measure(const Pfsa& pfsa, StateId start, std::span<const EventId> word, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw PreconditionError("theta must lie in (0,1)");
    if (start >= pfsa.state_count()) throw PreconditionError("start state out of range");
    double value = theta;
    StateId q = start;
    for (std::size_t k = 0; k < word.size(); ++k) {
        const auto* t = pfsa.find(q, word[k]);
        if (!t)
            throw PreconditionError("event " + std::to_string(word[k]) + " undefined at state " + std::to_string(q) +
                                    " (word position " + std::to_string(k) + ")");
        value *= (1.0 - theta) * t->prob;
        q = t->dst;
    }
    return value * pfsa.chi()[q];
}

Pfsa apply_disabling(const Pfsa& pfsa, const ArcSet& disabled) {
    std::vector<std::vector<Transition>> rows(pfsa.state_count());
    for (StateId s = 0; s < pfsa.state_count(); ++s) rows[s].assign(pfsa.row(s).begin(), pfsa.row(s).end());
    for (const auto& a : disabled) {
        if (a.state >= pfsa.state_count()) throw PreconditionError("cannot disable " + arc_name(a.state, a.event) + ": no such state");
        auto& r = rows[a.state];
        auto it = std::find_if(r.begin(), r.end(), [&](const Transition& t) { return t.event == a.event; });
        if (it == r.end()) throw PreconditionError("cannot disable " + arc_name(a.state, a.event) + ": undefined");
        if (!it->controllable)
            throw PreconditionError("cannot disable " + arc_name(a.state, a.event) + ": uncontrollable");
        it->dst = a.state;
    }
    return pfsa.with_rows(std::move(rows));
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_pfsa(std::ostream& out, const Pfsa& pfsa, const ArcSet* disabled) {
    out << "pfsa " << pfsa.state_count() << ' ' << pfsa.event_count() << '\n';
    for (StateId s = 0; s < pfsa.state_count(); ++s)
        for (const auto& t : pfsa.row(s))
            out << s << ' ' << t.event << ' ' << t.dst << ' ' << format_double(t.prob) << ' '
                << (t.controllable ? "ctrl" : "unctrl") << '\n';
    for (std::size_t i = 0; i < pfsa.state_count(); ++i)
        if (pfsa.chi()[i] != 0.0) out << "chi " << i << ' ' << format_double(pfsa.chi()[i]) << '\n';
    if (disabled) {
        out << "disabled\n";
        for (const auto& a : *disabled) out << a.state << ' ' << a.event << '\n';
    }
}

std::string format_pfsa(const Pfsa& pfsa, const ArcSet* disabled) {
    std::ostringstream os;
    write_pfsa(os, pfsa, disabled);
    return os.str();
}

namespace {

template <class T>
T parse_num(const std::string& tok, const std::string& source, std::size_t line) {
    T v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError(source, line, "bad number '" + tok + "'");
    return v;
}

}  // namespace

ParsedPfsa read_pfsa(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    std::size_t n = 0, l = 0;
    bool header = false, in_disabled = false;
    std::vector<std::vector<Transition>> rows;
    std::vector<double> chi;
    ArcSet disabled;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty() || tok[0][0] == '#') continue;
        if (!header) {
            if (tok.size() != 3 || tok[0] != "pfsa") throw ParseError(source, lineno, "expected 'pfsa n l' header");
            n = parse_num<std::size_t>(tok[1], source, lineno);
            l = parse_num<std::size_t>(tok[2], source, lineno);
            rows.resize(n);
            chi.assign(n, 0.0);
            header = true;
            continue;
        }
        if (tok[0] == "disabled" && tok.size() == 1) {
            in_disabled = true;
            continue;
        }
        if (in_disabled) {
            if (tok.size() != 2) throw ParseError(source, lineno, "expected 'state event'");
            disabled.insert({parse_num<StateId>(tok[0], source, lineno), parse_num<EventId>(tok[1], source, lineno)});
            continue;
        }
        if (tok[0] == "chi") {
            if (tok.size() != 3) throw ParseError(source, lineno, "expected 'chi i value'");
            auto i = parse_num<std::size_t>(tok[1], source, lineno);
            if (i >= n) throw ParseError(source, lineno, "chi index out of range");
            chi[i] = parse_num<double>(tok[2], source, lineno);
            continue;
        }
        if (tok.size() != 5) throw ParseError(source, lineno, "expected 'src event dst prob ctrl|unctrl'");
        auto src = parse_num<StateId>(tok[0], source, lineno);
        if (src >= n) throw ParseError(source, lineno, "source state out of range");
        Transition t{parse_num<EventId>(tok[1], source, lineno), parse_num<StateId>(tok[2], source, lineno),
                     parse_num<double>(tok[3], source, lineno), false};
        if (tok[4] == "ctrl")
            t.controllable = true;
        else if (tok[4] != "unctrl")
            throw ParseError(source, lineno, "controllability must be ctrl or unctrl");
        rows[src].push_back(t);
    }
    if (!header) throw ParseError(source, lineno, "missing 'pfsa' header");
    try {
        return {Pfsa(n, l, std::move(rows), std::move(chi)), std::move(disabled)};
    } catch (const PreconditionError& e) {
        throw ParseError(source, 0, e.what());
    }
}

ParsedPfsa parse_pfsa(const std::string& text) {
    std::istringstream is(text);
    return read_pfsa(is);
}

}  // namespace nustar
