#include "nustar/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "nustar/errors.hpp"
#include "nustar/pfsa.hpp"

namespace nustar {

double row_sum(const UcRow& row) {
    double s = 0.0;
    for (double v : row) s += v;
    return s;
}

namespace {

void check_row(const UcRow& row, double extra, const std::string& where) {
    for (double v : row)
        if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("negative or invalid probability in " + where);
    if (!(extra >= 0.0)) throw PreconditionError("negative turn probability in " + where);
    if (row_sum(row) + extra > 1.0 - UncertaintyModel::kEpsilon + 1e-15)
        throw PreconditionError("uncontrollable mass in " + where + " exceeds 1 - epsilon");
}

}  // namespace

UncertaintyModel UncertaintyModel::averaged_row(const UcRow& row, double turn) {
    UncertaintyModel m;
    m.mode = UncertaintyMode::averaged;
    m.averaged = row;
    m.turn = turn;
    m.validate();
    return m;
}

UncertaintyModel UncertaintyModel::uniform(double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw PreconditionError("gamma must lie in (0,1]");
    if (gamma == 1.0) return none_model();
    UcRow row;
    row.fill((1.0 - gamma) / 8.0);
    return averaged_row(row);
}

UncertaintyModel UncertaintyModel::per_state_rows(std::map<std::size_t, UcRow> rows) {
    UncertaintyModel m;
    m.mode = UncertaintyMode::per_state;
    m.per_state = std::move(rows);
    m.validate();
    return m;
}

UcRow UncertaintyModel::row_for(std::size_t cell) const {
    switch (mode) {
        case UncertaintyMode::none: return UcRow{};
        case UncertaintyMode::averaged: return averaged;
        case UncertaintyMode::per_state: {
            auto it = per_state.find(cell);
            return it == per_state.end() ? UcRow{} : it->second;
        }
    }
    return UcRow{};
}

double UncertaintyModel::turn_for(std::size_t) const { return mode == UncertaintyMode::averaged ? turn : 0.0; }

double UncertaintyModel::gamma() const {
    double worst = 0.0;
    switch (mode) {
        case UncertaintyMode::none: break;
        case UncertaintyMode::averaged: worst = row_sum(averaged) + turn; break;
        case UncertaintyMode::per_state:
            for (const auto& [cell, row] : per_state) worst = std::max(worst, row_sum(row));
            break;
    }
    if (history)
        for (const auto& row : *history) worst = std::max(worst, row_sum(row));
    return 1.0 - worst;
}

void UncertaintyModel::validate() const {
    if (mode == UncertaintyMode::averaged) check_row(averaged, turn, "averaged row");
    for (const auto& [cell, row] : per_state) check_row(row, 0.0, "row of cell " + std::to_string(cell));
    if (history)
        for (std::size_t k = 0; k < history->size(); ++k)
            check_row((*history)[k], 0.0, "history row " + std::to_string(k));
}

ContourTable uniform_table(const UcRow& row) {
    ContourTable t;
    t.fill(row);
    return t;
}

ContourTable forward_biased_table(double total, double forward_share) {
    if (!(total >= 0.0 && total <= 1.0 - UncertaintyModel::kEpsilon) || !(forward_share > 1.0 / 8 && forward_share <= 1.0))
        throw PreconditionError("forward-biased table needs total in [0, 1-eps] and forward share in (1/8, 1]");
    ContourTable t;
    for (int inc = 0; inc < 8; ++inc) {
        t[inc].fill(total * (1.0 - forward_share) / 7.0);
        t[inc][inc] = total * forward_share;
    }
    t[kRest].fill(total / 8.0);
    return t;
}

UcRow average_row(const ContourTable& table) {
    UcRow out{};
    for (int d = 0; d < 8; ++d) {
        const double first = table[0][d];
        bool same = true;
        double sum = 0.0;
        for (const auto& row : table) {
            same = same && row[d] == first;
            sum += row[d];
        }
        out[d] = same ? first : sum / static_cast<double>(table.size());
    }
    return out;
}

namespace {

double parse_prob(const std::string& tok, const std::string& source, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw ParseError(source, line, "bad probability '" + tok + "'");
    }
    if (used != tok.size() || !(v >= 0.0 && v <= 1.0)) throw ParseError(source, line, "bad probability '" + tok + "'");
    return v;
}

int parse_dir(const std::string& tok, const std::string& source, std::size_t line) {
    auto d = parse_direction(tok);
    if (!d) throw ParseError(source, line, "unknown direction '" + tok + "'");
    return *d;
}

std::size_t parse_state(const std::string& tok, int cols, const std::string& source, std::size_t line) {
    try {
        auto comma = tok.find(',');
        if (comma == std::string::npos) return static_cast<std::size_t>(std::stoul(tok));
        const int r = std::stoi(tok.substr(0, comma));
        const int c = std::stoi(tok.substr(comma + 1));
        if (r < 0 || c < 0 || c >= cols) throw std::out_of_range("cell");
        return static_cast<std::size_t>(r) * cols + c;
    } catch (const std::exception&) {
        throw ParseError(source, line, "bad state '" + tok + "'");
    }
}

}  // namespace

UncertaintyModel parse_uncertainty(std::istream& in, int cols, const std::string& source) {
    UncertaintyModel m;
    bool averaged = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty() || tok[0][0] == '#') continue;
        if (tok[0] == "uc" && tok.size() == 3) {
            averaged = true;
            if (tok[1] == "turn")
                m.turn = parse_prob(tok[2], source, lineno);
            else
                m.averaged[parse_dir(tok[1], source, lineno)] = parse_prob(tok[2], source, lineno);
        } else if (tok[0] == "uc_state" && tok.size() == 4) {
            m.per_state[parse_state(tok[1], cols, source, lineno)][parse_dir(tok[2], source, lineno)] =
                parse_prob(tok[3], source, lineno);
        } else if (tok[0] == "uc_from" && tok.size() == 4) {
            if (!m.history) m.history = ContourTable{};
            const int inc = tok[1] == "rest" ? kRest : parse_dir(tok[1], source, lineno);
            (*m.history)[inc][parse_dir(tok[2], source, lineno)] = parse_prob(tok[3], source, lineno);
        } else {
            throw ParseError(source, lineno, "expected 'uc', 'uc_state' or 'uc_from' line");
        }
    }
    if (averaged && !m.per_state.empty()) throw ParseError(source, 0, "cannot mix 'uc' and 'uc_state' lines");
    if (averaged) m.mode = UncertaintyMode::averaged;
    else if (!m.per_state.empty()) m.mode = UncertaintyMode::per_state;
    try {
        m.validate();
    } catch (const PreconditionError& e) {
        throw ParseError(source, 0, e.what());
    }
    return m;
}

UncertaintyModel load_uncertainty(const std::string& path, int cols) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, 0, "cannot open uncertainty file");
    return parse_uncertainty(f, cols, path);
}

void write_uncertainty(std::ostream& out, const UncertaintyModel& m) {
    if (m.mode == UncertaintyMode::averaged) {
        for (int d = 0; d < 8; ++d) out << "uc " << kDirNames[d] << ' ' << format_double(m.averaged[d]) << '\n';
        if (m.turn > 0.0) out << "uc turn " << format_double(m.turn) << '\n';
    }
    for (const auto& [cell, row] : m.per_state)
        for (int d = 0; d < 8; ++d)
            if (row[d] > 0.0) out << "uc_state " << cell << ' ' << kDirNames[d] << ' ' << format_double(row[d]) << '\n';
    if (m.history)
        for (int inc = 0; inc < 9; ++inc)
            for (int d = 0; d < 8; ++d)
                out << "uc_from " << (inc == kRest ? std::string("rest") : std::string(kDirNames[inc])) << ' '
                    << kDirNames[d] << ' ' << format_double((*m.history)[inc][d]) << '\n';
}

}  // namespace nustar
