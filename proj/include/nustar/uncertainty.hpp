#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "nustar/grid_map.hpp"

namespace nustar {

// Uncontrollable probability per compass direction (see kDirNames).
using UcRow = std::array<double, 8>;

double row_sum(const UcRow& row);

enum class UncertaintyMode { none, averaged, per_state };

// Per-incoming-direction rows for the history model; index 8 is "rest".
inline constexpr int kRest = 8;
using ContourTable = std::array<UcRow, 9>;

struct UncertaintyModel {
    // Smallest admissible gamma; row sums may not exceed 1 - epsilon.
    static constexpr double kEpsilon = 1e-3;

    UncertaintyMode mode = UncertaintyMode::none;
    UcRow averaged{};
    // In-place heading change mass (heading model only), split over +-1 step.
    double turn = 0.0;
    std::map<std::size_t, UcRow> per_state;  // keyed by row-major cell index
    std::optional<ContourTable> history;

    static UncertaintyModel none_model() { return {}; }
    static UncertaintyModel averaged_row(const UcRow& row, double turn = 0.0);
    // Spreads 1 - gamma evenly over the eight directions.
    static UncertaintyModel uniform(double gamma);
    static UncertaintyModel per_state_rows(std::map<std::size_t, UcRow> rows);

    UcRow row_for(std::size_t cell) const;
    double turn_for(std::size_t cell) const;
    double gamma() const;
    void validate() const;
};

ContourTable uniform_table(const UcRow& row);
// Rows where the direction of travel gets `forward_share` of `total` and the
// remainder is spread over the other seven directions.
ContourTable forward_biased_table(double total, double forward_share);
UcRow average_row(const ContourTable& table);

// Lines: "uc <dir|turn> <p>", "uc_state <cell-index|r,c> <dir> <p>",
// "uc_from <dir|rest> <dir> <p>". Directions use kDirNames.
UncertaintyModel parse_uncertainty(std::istream& in, int cols, const std::string& source = "<uncertainty>");
UncertaintyModel load_uncertainty(const std::string& path, int cols);
void write_uncertainty(std::ostream& out, const UncertaintyModel& model);

}  // namespace nustar
