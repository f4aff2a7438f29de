#include "nustar/grid_map.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include "nustar/errors.hpp"

namespace nustar {

std::optional<int> parse_direction(std::string_view name) {
    for (int d = 0; d < kDirections; ++d)
        if (kDirNames[d] == name) return d;
    return std::nullopt;
}

std::optional<int> direction_between(Cell a, Cell b) {
    for (int d = 0; d < kDirections; ++d)
        if (step(a, d) == b) return d;
    return std::nullopt;
}

GridMap::GridMap(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows <= 0 || cols <= 0) throw PreconditionError("grid must have positive dimensions");
    blocked_.assign(cell_count(), 0);
}

std::size_t GridMap::index(Cell c) const {
    if (!in_bounds(c))
        throw PreconditionError("cell (" + std::to_string(c.row) + "," + std::to_string(c.col) + ") outside grid");
    return static_cast<std::size_t>(c.row) * cols_ + c.col;
}

void GridMap::set_blocked(Cell c, bool value) { blocked_.at(index(c)) = value ? 1 : 0; }

bool GridMap::is_goal(Cell c) const { return std::find(goals_.begin(), goals_.end(), c) != goals_.end(); }

void GridMap::validate() const {
    if (rows_ <= 0 || cols_ <= 0) throw PreconditionError("empty grid");
    if (goals_.empty()) throw PreconditionError("grid has no goal");
    for (const auto& g : goals_) {
        if (!in_bounds(g)) throw PreconditionError("goal outside grid");
        if (blocked(g)) throw PreconditionError("goal cell is blocked");
    }
    if (start_ && !in_bounds(*start_)) throw PreconditionError("start outside grid");
}

GridMap GridMap::parse(std::istream& in, const std::string& source) {
    std::vector<std::string> lines;
    std::vector<std::size_t> numbers;
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::pair<int, int>> declared;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lines.empty() && !declared && std::isdigit(static_cast<unsigned char>(line[0]))) {
            std::istringstream ls(line);
            int r = 0, c = 0;
            if (!(ls >> r >> c) || r <= 0 || c <= 0) throw ParseError(source, lineno, "bad 'rows cols' header");
            declared = {r, c};
            continue;
        }
        lines.push_back(line);
        numbers.push_back(lineno);
    }
    if (lines.empty()) throw ParseError(source, lineno, "empty map");
    const int rows = static_cast<int>(lines.size());
    const int cols = static_cast<int>(lines[0].size());
    if (declared && (declared->first != rows || declared->second != cols))
        throw ParseError(source, 1, "header dimensions do not match map body");
    GridMap g(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(lines[r].size()) != cols) throw ParseError(source, numbers[r], "ragged row");
        for (int c = 0; c < cols; ++c) {
            switch (lines[r][c]) {
                case '#': g.set_blocked({r, c}); break;
                case '.': break;
                case 'G': g.add_goal({r, c}); break;
                case 'S':
                    if (g.start_) throw ParseError(source, numbers[r], "more than one start");
                    g.start_ = Cell{r, c};
                    break;
                default:
                    throw ParseError(source, numbers[r], std::string("unexpected character '") + lines[r][c] + "'");
            }
        }
    }
    return g;
}

GridMap GridMap::parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
}

GridMap GridMap::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, 0, "cannot open map file");
    return parse(f, path);
}

std::string GridMap::to_string() const {
    std::string out;
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) {
            const Cell x{r, c};
            char ch = blocked(x) ? '#' : '.';
            if (is_goal(x)) ch = 'G';
            else if (start_ && *start_ == x) ch = 'S';
            out += ch;
        }
        out += '\n';
    }
    return out;
}

}  // namespace nustar
