#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nustar/grid_map.hpp"
#include "nustar/nav_model.hpp"
#include "nustar/uncertainty.hpp"

namespace nustar {

struct TrajectorySample {
    double t = 0.0;
    double x = 0.0;  // column axis, workspace units
    double y = 0.0;  // row axis (grows with row index)
    std::optional<double> heading;
    Cell target;
};

struct TrajectoryLog {
    std::vector<TrajectorySample> samples;
    double cell_size = 1.0;
    std::size_t interval_length = 200;

    std::size_t interval_count() const;
    void validate() const;
};

TrajectoryLog parse_trajectory(std::istream& in, const std::string& source = "<log>");
TrajectoryLog load_trajectory(const std::string& path);
void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);

// Distance from (x, y) to the nearest point of cell c; 0 inside.
double point_cell_distance(double x, double y, Cell c, double cell_size = 1.0);

std::vector<double> raw_deviation(const TrajectoryLog& log);

struct DelayOptions {
    std::size_t max_shift = 50;
};

struct DelayCorrection {
    std::vector<double> delta;
    std::size_t eta = 0;
};

DelayCorrection delay_corrected(const TrajectoryLog& log, std::size_t interval, const DelayOptions& options = {});

// Bin 0 is the point mass at zero deviation (edges[0] == edges[1] == 0);
// the remaining bins split (0, range] uniformly. Larger values land in the
// last bin.
struct DeviationHistogram {
    std::vector<double> edges;
    std::vector<double> masses;
    std::vector<std::size_t> delays;

    std::size_t bins() const { return masses.size(); }
};

DeviationHistogram histogram_of(const std::vector<double>& delta, double cell_size = 1.0, std::size_t bins = 32,
                                double range_cells = 2.0);
DeviationHistogram deviation_distribution(const std::vector<DeviationHistogram>& per_interval);
// Delay-corrects every interval of a log and averages the histograms.
DeviationHistogram identify_histogram(const TrajectoryLog& log, const DelayOptions& options = {});

void write_histogram_csv(std::ostream& out, const DeviationHistogram& h);
DeviationHistogram parse_histogram_csv(std::istream& in, const std::string& source = "<histogram>");

struct DeviationContour {
    enum class Kind { gaussian, histogram };
    Kind kind = Kind::gaussian;
    double sigma = 0.0;          // gaussian radial scale
    double cutoff = 4.0;         // gaussian support in units of sigma
    DeviationHistogram histogram;
    double offset_x = 0.0, offset_y = 0.0;
    double anisotropy_x = 1.0, anisotropy_y = 1.0;
    double cell_size = 1.0;

    static DeviationContour gaussian(double sigma, double cell_size = 1.0);
    static DeviationContour from_histogram(DeviationHistogram h, double cell_size = 1.0);

    bool symmetric() const;
    double max_radius() const;
    double sample_radius(std::mt19937_64& rng) const;
    void validate() const;
};

// "kernel gaussian sigma=<v>" or "kernel histogram <file>", plus optional
// "offset <dx> <dy>", "anisotropy <ax> <ay>", "cell_size <v>", "cutoff <k>".
DeviationContour parse_contour(std::istream& in, const std::string& base_dir, const std::string& source = "<contour>");
DeviationContour load_contour(const std::string& path);

struct IntegrationOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    double max_truncated = 0.0;  // tolerated probability of landing beyond the neighborhood
};

struct UcEstimate {
    double stay = 1.0;
    UcRow neighbor{};
    double stay_se = 0.0;
    UcRow neighbor_se{};
    double truncated = 0.0;
    std::size_t samples = 0;

    double uncontrollable_mass() const { return row_sum(neighbor); }
};

UcEstimate uncontrollable_probabilities(const DeviationContour& contour, const NavAutomaton& nav, StateId q,
                                        const IntegrationOptions& options = {});
// Same integration without an automaton (an unblocked interior cell).
UcEstimate cell_uncontrollable_probabilities(const DeviationContour& contour, const IntegrationOptions& options = {});

// Synthetic log: targets walk a serpentine over an open field; the pose
// lags the target by `lag` samples and deviates from the target cell by a
// distance drawn from the contour's radial law.
TrajectoryLog synthesize_log(const DeviationContour& contour, std::size_t samples, std::size_t lag, std::uint64_t seed,
                             int field = 20);

}  // namespace nustar
