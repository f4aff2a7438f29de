#include "nustar/uncertainty_id.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <tuple>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nustar/errors.hpp"
#include "nustar/pfsa.hpp"
#include "nustar/random.hpp"

namespace nustar {

std::size_t TrajectoryLog::interval_count() const {
    if (interval_length == 0) throw PreconditionError("interval length must be positive");
    return (samples.size() + interval_length - 1) / interval_length;
}

void TrajectoryLog::validate() const {
    if (samples.empty()) throw PreconditionError("empty trajectory log");
    if (!(cell_size > 0.0)) throw PreconditionError("cell size must be positive");
    for (std::size_t k = 1; k < samples.size(); ++k)
        if (!(samples[k].t > samples[k - 1].t))
            throw PreconditionError("timestamps must increase strictly (sample " + std::to_string(k) + ")");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, ',')) {
        const auto b = cur.find_first_not_of(" \t\r");
        const auto e = cur.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
    }
    return out;
}

double to_double(const std::string& s, const std::string& source, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ParseError(source, line, "bad number '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ParseError(source, line, "bad number '" + s + "'");
    return v;
}

int to_int(const std::string& s, const std::string& source, std::size_t line) {
    const double v = to_double(s, source, line);
    if (v != std::floor(v)) throw ParseError(source, line, "expected an integer, got '" + s + "'");
    return static_cast<int>(v);
}

}  // namespace

TrajectoryLog parse_trajectory(std::istream& in, const std::string& source) {
    TrajectoryLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto f = split_csv(line);
        if (!f.empty() && f[0] == "t") continue;  // header
        if (f.size() != 5 && f.size() != 6) throw ParseError(source, lineno, "expected t,x,y[,heading],target_row,target_col");
        TrajectorySample s;
        s.t = to_double(f[0], source, lineno);
        s.x = to_double(f[1], source, lineno);
        s.y = to_double(f[2], source, lineno);
        std::size_t k = 3;
        if (f.size() == 6) s.heading = to_double(f[k++], source, lineno);
        s.target = {to_int(f[k], source, lineno), to_int(f[k + 1], source, lineno)};
        if (s.target.row < 0 || s.target.col < 0) throw ParseError(source, lineno, "negative target cell");
        if (!log.samples.empty() && !(s.t > log.samples.back().t))
            throw ParseError(source, lineno, "timestamps must increase strictly");
        log.samples.push_back(s);
    }
    if (log.samples.empty()) throw ParseError(source, lineno, "log has no samples");
    return log;
}

TrajectoryLog load_trajectory(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, 0, "cannot open trajectory log");
    return parse_trajectory(f, path);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
    const bool heading = !log.samples.empty() && log.samples[0].heading.has_value();
    out << "t,x,y" << (heading ? ",heading" : "") << ",target_row,target_col\n";
    for (const auto& s : log.samples) {
        out << format_double(s.t) << ',' << format_double(s.x) << ',' << format_double(s.y);
        if (heading) out << ',' << format_double(s.heading.value_or(0.0));
        out << ',' << s.target.row << ',' << s.target.col << '\n';
    }
}

double point_cell_distance(double x, double y, Cell c, double cell_size) {
    const double x0 = c.col * cell_size, x1 = x0 + cell_size;
    const double y0 = c.row * cell_size, y1 = y0 + cell_size;
    const double dx = std::max({x0 - x, 0.0, x - x1});
    const double dy = std::max({y0 - y, 0.0, y - y1});
    return std::hypot(dx, dy);
}

std::vector<double> raw_deviation(const TrajectoryLog& log) {
    log.validate();
    std::vector<double> out;
    out.reserve(log.samples.size());
    for (const auto& s : log.samples) out.push_back(point_cell_distance(s.x, s.y, s.target, log.cell_size));
    return out;
}

DelayCorrection delay_corrected(const TrajectoryLog& log, std::size_t interval, const DelayOptions& options) {
    log.validate();
    const auto n = log.samples.size();
    const auto begin = interval * log.interval_length;
    if (begin >= n) throw PreconditionError("interval " + std::to_string(interval) + " out of range");
    const auto end = std::min(n, begin + log.interval_length);
    if (end - begin <= options.max_shift)
        throw PreconditionError("interval of " + std::to_string(end - begin) + " samples is shorter than the shift window " +
                                std::to_string(options.max_shift));
    // Only times whose every shifted pose exists take part in the search.
    const auto last = std::min(end, n - options.max_shift);
    if (last <= begin) throw PreconditionError("interval too close to the end of the log for the shift window");
    auto dist = [&](std::size_t t, std::size_t eta) {
        const auto& p = log.samples[t + eta];
        return point_cell_distance(p.x, p.y, log.samples[t].target, log.cell_size);
    };
    DelayCorrection r;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t eta = 0; eta <= options.max_shift; ++eta) {
        double acc = 0.0;
        for (std::size_t t = begin; t < last; ++t) {
            const double d = dist(t, eta);
            acc += d * d;
        }
        if (acc < best) {
            best = acc;
            r.eta = eta;
        }
    }
    for (std::size_t t = begin; t < end && t + r.eta < n; ++t) r.delta.push_back(dist(t, r.eta));
    return r;
}

DeviationHistogram histogram_of(const std::vector<double>& delta, double cell_size, std::size_t bins, double range_cells) {
    if (delta.empty()) throw PreconditionError("no deviations to bin");
    if (bins == 0 || !(range_cells > 0.0) || !(cell_size > 0.0)) throw PreconditionError("bad histogram geometry");
    DeviationHistogram h;
    const double range = range_cells * cell_size;
    h.edges.push_back(0.0);
    for (std::size_t k = 0; k <= bins; ++k) h.edges.push_back(range * static_cast<double>(k) / static_cast<double>(bins));
    h.masses.assign(bins + 1, 0.0);
    for (double d : delta) {
        if (!(d >= 0.0)) throw PreconditionError("negative deviation");
        if (d == 0.0) {
            h.masses[0] += 1.0;
            continue;
        }
        const auto k = static_cast<std::size_t>(d / range * static_cast<double>(bins));
        h.masses[1 + std::min(k, bins - 1)] += 1.0;
    }
    for (auto& m : h.masses) m /= static_cast<double>(delta.size());
    return h;
}

DeviationHistogram deviation_distribution(const std::vector<DeviationHistogram>& per_interval) {
    if (per_interval.empty()) throw PreconditionError("no histograms to average");
    DeviationHistogram out;
    out.edges = per_interval[0].edges;
    out.masses.assign(per_interval[0].masses.size(), 0.0);
    for (const auto& h : per_interval) {
        if (h.edges != out.edges || h.masses.size() != out.masses.size())
            throw PreconditionError("histograms have mismatched bins");
        for (std::size_t k = 0; k < h.masses.size(); ++k) out.masses[k] += h.masses[k];
        out.delays.insert(out.delays.end(), h.delays.begin(), h.delays.end());
    }
    const double total = std::accumulate(out.masses.begin(), out.masses.end(), 0.0);
    for (auto& m : out.masses) m /= total;
    return out;
}

DeviationHistogram identify_histogram(const TrajectoryLog& log, const DelayOptions& options) {
    std::vector<DeviationHistogram> parts;
    for (std::size_t k = 0; k < log.interval_count(); ++k) {
        const auto begin = k * log.interval_length;
        const auto end = std::min(log.samples.size(), begin + log.interval_length);
        // A trailing fragment too short for the shift search is dropped.
        if (end - begin <= options.max_shift || begin + options.max_shift >= log.samples.size() ||
            std::min(end, log.samples.size() - options.max_shift) <= begin) {
            if (k == 0) throw PreconditionError("log shorter than the shift window");
            continue;
        }
        const auto dc = delay_corrected(log, k, options);
        auto h = histogram_of(dc.delta, log.cell_size);
        h.delays = {dc.eta};
        parts.push_back(std::move(h));
    }
    return deviation_distribution(parts);
}

void write_histogram_csv(std::ostream& out, const DeviationHistogram& h) {
    out << "lo,hi,mass\n";
    for (std::size_t k = 0; k < h.masses.size(); ++k)
        out << format_double(h.edges[k]) << ',' << format_double(h.edges[k + 1]) << ',' << format_double(h.masses[k])
            << '\n';
}

DeviationHistogram parse_histogram_csv(std::istream& in, const std::string& source) {
    DeviationHistogram h;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto f = split_csv(line);
        if (!f.empty() && f[0] == "lo") continue;
        if (f.size() != 3) throw ParseError(source, lineno, "expected lo,hi,mass");
        const double lo = to_double(f[0], source, lineno), hi = to_double(f[1], source, lineno);
        if (h.edges.empty()) h.edges.push_back(lo);
        else if (h.edges.back() != lo) throw ParseError(source, lineno, "bins are not contiguous");
        if (hi < lo) throw ParseError(source, lineno, "bin upper edge below lower edge");
        h.edges.push_back(hi);
        const double m = to_double(f[2], source, lineno);
        if (m < 0.0) throw ParseError(source, lineno, "negative mass");
        h.masses.push_back(m);
    }
    if (h.masses.empty()) throw ParseError(source, lineno, "empty histogram");
    const double total = std::accumulate(h.masses.begin(), h.masses.end(), 0.0);
    if (!(total > 0.0)) throw ParseError(source, lineno, "histogram has no mass");
    for (auto& m : h.masses) m /= total;
    return h;
}

DeviationContour DeviationContour::gaussian(double sigma, double cell_size) {
    DeviationContour c;
    c.kind = Kind::gaussian;
    c.sigma = sigma;
    c.cell_size = cell_size;
    c.validate();
    return c;
}

DeviationContour DeviationContour::from_histogram(DeviationHistogram h, double cell_size) {
    DeviationContour c;
    c.kind = Kind::histogram;
    c.histogram = std::move(h);
    c.cell_size = cell_size;
    c.validate();
    return c;
}

bool DeviationContour::symmetric() const {
    return offset_x == 0.0 && offset_y == 0.0 && anisotropy_x == anisotropy_y;
}

double DeviationContour::max_radius() const {
    double r = 0.0;
    if (kind == Kind::gaussian) r = cutoff * sigma;
    else
        for (std::size_t k = 0; k < histogram.masses.size(); ++k)
            if (histogram.masses[k] > 0.0) r = histogram.edges[k + 1];
    return r * std::max(anisotropy_x, anisotropy_y) + std::hypot(offset_x, offset_y);
}

double DeviationContour::sample_radius(std::mt19937_64& rng) const {
    if (kind == Kind::gaussian) {
        if (sigma == 0.0) return 0.0;
        for (;;) {
            const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
            const double r = sigma * std::abs(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
            if (r <= cutoff * sigma) return r;
        }
    }
    double u = uniform01(rng);
    std::size_t k = 0;
    for (; k + 1 < histogram.masses.size(); ++k) {
        if (u < histogram.masses[k]) break;
        u -= histogram.masses[k];
    }
    while (histogram.masses[k] == 0.0 && k > 0) --k;
    const double lo = histogram.edges[k], hi = histogram.edges[k + 1];
    return lo + (hi - lo) * uniform01(rng);
}

void DeviationContour::validate() const {
    if (!(cell_size > 0.0)) throw PreconditionError("contour cell size must be positive");
    if (!(anisotropy_x > 0.0 && anisotropy_y > 0.0)) throw PreconditionError("anisotropy factors must be positive");
    if (kind == Kind::gaussian) {
        if (!(sigma >= 0.0) || !(cutoff > 0.0)) throw PreconditionError("gaussian contour needs sigma >= 0 and cutoff > 0");
        return;
    }
    const auto& h = histogram;
    if (h.masses.empty() || h.edges.size() != h.masses.size() + 1) throw PreconditionError("malformed contour histogram");
    double total = 0.0;
    for (double m : h.masses) {
        if (m < 0.0) throw PreconditionError("negative contour mass");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-9) throw PreconditionError("contour histogram mass does not sum to 1");
}

DeviationContour parse_contour(std::istream& in, const std::string& base_dir, const std::string& source) {
    DeviationContour c;
    bool kernel = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty() || tok[0][0] == '#') continue;
        if (tok[0] == "kernel" && tok.size() == 3 && tok[1] == "gaussian") {
            if (tok[2].rfind("sigma=", 0) != 0) throw ParseError(source, lineno, "expected sigma=<value>");
            c.kind = DeviationContour::Kind::gaussian;
            c.sigma = to_double(tok[2].substr(6), source, lineno);
            kernel = true;
        } else if (tok[0] == "kernel" && tok.size() == 3 && tok[1] == "histogram") {
            std::filesystem::path p(tok[2]);
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            std::ifstream f(p);
            if (!f) throw ParseError(source, lineno, "cannot open histogram " + p.string());
            c.kind = DeviationContour::Kind::histogram;
            c.histogram = parse_histogram_csv(f, p.string());
            kernel = true;
        } else if (tok[0] == "offset" && tok.size() == 3) {
            c.offset_x = to_double(tok[1], source, lineno);
            c.offset_y = to_double(tok[2], source, lineno);
        } else if (tok[0] == "anisotropy" && tok.size() == 3) {
            c.anisotropy_x = to_double(tok[1], source, lineno);
            c.anisotropy_y = to_double(tok[2], source, lineno);
        } else if (tok[0] == "cell_size" && tok.size() == 2) {
            c.cell_size = to_double(tok[1], source, lineno);
        } else if (tok[0] == "cutoff" && tok.size() == 2) {
            c.cutoff = to_double(tok[1], source, lineno);
        } else {
            throw ParseError(source, lineno, "unrecognized contour line");
        }
    }
    if (!kernel) throw ParseError(source, lineno, "missing 'kernel' line");
    try {
        c.validate();
    } catch (const PreconditionError& e) {
        throw ParseError(source, 0, e.what());
    }
    return c;
}

DeviationContour load_contour(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, 0, "cannot open contour file");
    return parse_contour(f, std::filesystem::path(path).parent_path().string(), path);
}

namespace {

// Index 0 = stay, 1..8 = neighbor direction + 1, 9 = beyond the neighborhood.
int classify(double ex, double ey) {
    const int dc = static_cast<int>(std::floor(ex + 0.5));
    const int dr = static_cast<int>(std::floor(ey + 0.5));
    if (dr == 0 && dc == 0) return 0;
    if (std::abs(dr) > 1 || std::abs(dc) > 1) return 9;
    return 1 + *direction_between({0, 0}, {dr, dc});
}

UcEstimate integrate(const DeviationContour& contour, const IntegrationOptions& options) {
    contour.validate();
    if (options.samples < 2) throw PreconditionError("integration needs at least two samples");
    auto rng = stream_rng(options.seed, 0);
    const bool sym = contour.symmetric();
    const double weight = sym ? 1.0 / 8.0 : 1.0;
    std::array<double, 10> sum{}, sum2{};
    const double cs = contour.cell_size;
    for (std::size_t g = 0; g < options.samples; ++g) {
        const double sx = uniform01(rng) - 0.5, sy = uniform01(rng) - 0.5;
        const double r = contour.sample_radius(rng) / cs;
        const double rho = r * std::sqrt(uniform01(rng));
        const double phi = 2.0 * std::numbers::pi * uniform01(rng);
        const double dx = rho * std::cos(phi) * contour.anisotropy_x + contour.offset_x / cs;
        const double dy = rho * std::sin(phi) * contour.anisotropy_y + contour.offset_y / cs;
        std::array<double, 10> v{};
        if (sym) {
            // The eight symmetries of the square applied to start and displacement.
            for (int k = 0; k < 8; ++k) {
                double a = sx, b = sy, p = dx, q = dy;
                if (k & 4) {
                    std::swap(a, b);
                    std::swap(p, q);
                }
                if (k & 1) a = -a, p = -p;
                if (k & 2) b = -b, q = -q;
                v[classify(a + p, b + q)] += weight;
            }
        } else {
            v[classify(sx + dx, sy + dy)] += weight;
        }
        for (int k = 0; k < 10; ++k) {
            sum[k] += v[k];
            sum2[k] += v[k] * v[k];
        }
    }
    const double n = static_cast<double>(options.samples);
    std::array<double, 10> mean{}, se{};
    for (int k = 0; k < 10; ++k) {
        mean[k] = sum[k] / n;
        se[k] = std::sqrt(std::max(0.0, sum2[k] / n - mean[k] * mean[k]) / (n - 1.0));
    }
    UcEstimate est;
    est.samples = options.samples;
    est.truncated = mean[9];
    if (est.truncated > options.max_truncated) {
        std::ostringstream os;
        os << "deviation contour reaches beyond the neighboring cells; truncated mass " << est.truncated;
        throw PreconditionError(os.str());
    }
    const double keep = 1.0 - est.truncated;
    est.stay = mean[0] / keep;
    est.stay_se = se[0] / keep;
    for (int d = 0; d < 8; ++d) {
        est.neighbor[d] = mean[d + 1] / keep;
        est.neighbor_se[d] = se[d + 1] / keep;
    }
    return est;
}

}  // namespace

UcEstimate uncontrollable_probabilities(const DeviationContour& contour, const NavAutomaton& nav, StateId q,
                                        const IntegrationOptions& options) {
    if (q >= nav.size()) throw PreconditionError("state out of range");
    if (nav.is_obstacle(q)) throw PreconditionError("uncontrollable probabilities requested for a blocked state");
    return integrate(contour, options);
}

UcEstimate cell_uncontrollable_probabilities(const DeviationContour& contour, const IntegrationOptions& options) {
    return integrate(contour, options);
}

TrajectoryLog synthesize_log(const DeviationContour& contour, std::size_t samples, std::size_t lag, std::uint64_t seed,
                             int field) {
    if (field < 2) throw PreconditionError("synthetic field must span at least 2 cells");
    contour.validate();
    std::vector<Cell> walk;
    for (int r = 0; r < field; ++r)
        for (int k = 0; k < field; ++k) walk.push_back({r, r % 2 == 0 ? k : field - 1 - k});
    // Ping-pong over the serpentine so consecutive targets stay adjacent.
    const std::size_t period = 2 * walk.size() - 2;
    auto target = [&](std::size_t t) {
        const std::size_t k = t % period;
        return walk[k < walk.size() ? k : period - k];
    };
    const double cs = contour.cell_size;
    auto rng = stream_rng(seed, 0);
    auto place = [&](Cell c) {
        const double x0 = c.col * cs, y0 = c.row * cs;
        const double d = contour.sample_radius(rng);
        if (d == 0.0) return std::pair{x0 + cs * uniform01(rng), y0 + cs * uniform01(rng)};
        // Uniform point on the curve at distance d around the cell.
        const double arc = 0.5 * std::numbers::pi * d;
        double u = uniform01(rng) * 4.0 * (cs + arc);
        const int side = static_cast<int>(u / (cs + arc));
        u -= side * (cs + arc);
        double px, py;
        if (u < cs) {
            // straight part of the side, outward normal rotates with side
            const double s = u;
            switch (side) {
                case 0: px = x0 + s, py = y0 - d; break;
                case 1: px = x0 + cs + d, py = y0 + s; break;
                case 2: px = x0 + cs - s, py = y0 + cs + d; break;
                default: px = x0 - d, py = y0 + cs - s; break;
            }
        } else {
            const double a = (u - cs) / d;  // angle swept around the corner
            const double start = -0.5 * std::numbers::pi + side * 0.5 * std::numbers::pi;
            const double cx = (side == 0 || side == 1) ? x0 + cs : x0;
            const double cy = (side == 1 || side == 2) ? y0 + cs : y0;
            px = cx + d * std::cos(start + a);
            py = cy + d * std::sin(start + a);
        }
        return std::pair{px, py};
    };
    TrajectoryLog log;
    log.cell_size = cs;
    for (std::size_t t = 0; t < samples; ++t) {
        TrajectorySample s;
        s.t = 0.05 * static_cast<double>(t);
        s.target = target(t);
        const Cell anchor = t >= lag ? target(t - lag) : target(0);
        std::tie(s.x, s.y) = place(anchor);
        log.samples.push_back(s);
    }
    return log;
}

}  // namespace nustar
