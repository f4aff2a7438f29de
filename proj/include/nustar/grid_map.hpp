#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nustar {

struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell&) const = default;
};

// Compass directions in counter-clockwise angle order starting at east, so
// direction d points at d * 45 degrees (north is up, i.e. decreasing row).
inline constexpr int kDirections = 8;
inline constexpr std::array<int, 8> kDirRow = {0, -1, -1, -1, 0, 1, 1, 1};
inline constexpr std::array<int, 8> kDirCol = {1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr std::array<std::string_view, 8> kDirNames = {"E", "NE", "N", "NW", "W", "SW", "S", "SE"};

std::optional<int> parse_direction(std::string_view name);
inline Cell step(Cell c, int dir) { return {c.row + kDirRow[dir], c.col + kDirCol[dir]}; }
// Direction from a to an adjacent cell b, if any.
std::optional<int> direction_between(Cell a, Cell b);

class GridMap {
public:
    GridMap() = default;
    GridMap(int rows, int cols);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t cell_count() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }

    bool in_bounds(Cell c) const noexcept { return c.row >= 0 && c.col >= 0 && c.row < rows_ && c.col < cols_; }
    bool blocked(Cell c) const { return blocked_.at(index(c)) != 0; }
    void set_blocked(Cell c, bool value = true);
    std::size_t index(Cell c) const;
    Cell cell(std::size_t index) const { return {static_cast<int>(index / cols_), static_cast<int>(index % cols_)}; }

    const std::vector<Cell>& goals() const noexcept { return goals_; }
    void set_goals(std::vector<Cell> goals) { goals_ = std::move(goals); }
    void add_goal(Cell c) { goals_.push_back(c); }
    std::optional<int> goal_heading() const noexcept { return goal_heading_; }
    void set_goal_heading(std::optional<int> h) { goal_heading_ = h; }
    std::optional<Cell> start() const noexcept { return start_; }
    void set_start(std::optional<Cell> c) { start_ = c; }
    bool is_goal(Cell c) const;

    // Throws PreconditionError for an empty grid, a blocked goal, or
    // out-of-range cells.
    void validate() const;

    static GridMap parse(std::istream& in, const std::string& source = "<map>");
    static GridMap parse_string(const std::string& text);
    static GridMap load(const std::string& path);
    std::string to_string() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<char> blocked_;
    std::vector<Cell> goals_;
    std::optional<int> goal_heading_;
    std::optional<Cell> start_;
};

}  // namespace nustar
