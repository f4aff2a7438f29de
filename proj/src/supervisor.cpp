#include "nustar/supervisor.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <limits>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/LU>

#include "nustar/errors.hpp"
#include "nustar/measure_solver.hpp"

namespace nustar {

namespace {

struct ControlArc {
    StateId state;
    EventId event;
    StateId target;
    double prob;
};

std::vector<ControlArc> control_arcs(const Pfsa& pfsa) {
    std::vector<ControlArc> arcs;
    for (StateId s = 0; s < pfsa.state_count(); ++s)
        for (const auto& t : pfsa.row(s))
            if (t.controllable) arcs.push_back({s, t.event, t.dst, t.prob});
    return arcs;
}

// Transition matrix with a pattern that does not depend on `off`: every
// original edge and the diagonal are always present, possibly as zeros.
SparseRowMatrix fixed_pattern_matrix(const Pfsa& pfsa, [[maybe_unused]] const std::vector<ControlArc>& arcs,
                                     const std::vector<char>& off) {
    const auto n = static_cast<Eigen::Index>(pfsa.state_count());
    std::vector<Eigen::Triplet<double>> trips;
    std::size_t a = 0;
    for (StateId s = 0; s < pfsa.state_count(); ++s) {
        trips.emplace_back(s, s, 0.0);
        for (const auto& t : pfsa.row(s)) {
            bool disabled = false;
            if (t.controllable) {
                disabled = off[a] != 0;
                ++a;
            }
            if (disabled) {
                trips.emplace_back(s, s, t.prob);
                trips.emplace_back(s, t.dst, 0.0);
            } else {
                trips.emplace_back(s, t.dst, t.prob);
            }
        }
    }
    SparseRowMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

using Pattern = std::vector<char>;

// Tie band for measure comparisons: the configured tolerance on the
// un-renormalized scale plus a few ulps of the solve.
double decision_band(double tol, double theta, const Eigen::VectorXd& chi) {
    return tol * theta + 8.0 * std::numeric_limits<double>::epsilon() * chi.lpNorm<Eigen::Infinity>();
}

Pattern decision_pattern(const Eigen::VectorXd& nu, std::span<const DecisionPair> pairs, double tol) {
    Pattern p(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) p[k] = should_disable(nu[pairs[k].from], nu[pairs[k].to], tol);
    return p;
}

double critical_theta_impl(ResolventSolver& solver, const SparseRowMatrix& pi, const Eigen::VectorXd& chi,
                           std::span<const DecisionPair> pairs, const CriticalThetaOptions& opt) {
    if (!(opt.upper > 0.0 && opt.upper < 1.0)) throw PreconditionError("critical theta upper bound must lie in (0,1)");
    if (pairs.empty()) return opt.upper;
    std::map<double, Pattern> cache;
    auto pattern = [&](double theta) -> const Pattern& {
        auto it = cache.find(theta);
        if (it != cache.end()) return it->second;
        return cache.emplace(theta, decision_pattern(solver.solve(pi, chi, theta), pairs, decision_band(opt.tie_tolerance, theta, chi)))
            .first->second;
    };
    std::optional<std::size_t> unstable;
    for (double theta = opt.upper; theta >= opt.floor; theta *= 0.5) {
        const double probes[] = {theta * 0.5, theta * 0.25, theta * opt.far_probe};
        const Pattern& base = pattern(theta);
        bool stable = true;
        for (double p : probes) {
            if (p <= 0.0) continue;
            const Pattern& other = pattern(p);
            if (other != base) {
                stable = false;
                unstable = std::mismatch(base.begin(), base.end(), other.begin()).first - base.begin();
                break;
            }
        }
        if (stable) return theta;
        // Drop patterns that can no longer be reused.
        cache.erase(cache.upper_bound(theta * 0.5), cache.end());
    }
    if (opt.clamp_to_floor) return opt.floor;
    const auto& pr = pairs[unstable.value_or(0)];
    throw ConvergenceError("measure ordering did not stabilize above theta = " + format_double(opt.floor) +
                           "; unstable pair (" + std::to_string(pr.from) + ", " + std::to_string(pr.to) + ")");
}

std::vector<DecisionPair> offdiagonal_pairs(const SparseRowMatrix& pi) {
    std::vector<DecisionPair> pairs;
    for (Eigen::Index i = 0; i < pi.outerSize(); ++i)
        for (SparseRowMatrix::InnerIterator it(pi, i); it; ++it)
            if (it.col() != i && it.value() != 0.0)
                pairs.push_back({static_cast<StateId>(i), static_cast<StateId>(it.col())});
    return pairs;
}

}  // namespace

double critical_theta(const TransitionMatrix& pi, const Eigen::VectorXd& chi, const CriticalThetaOptions& options) {
    const auto pairs = offdiagonal_pairs(pi.pi);
    return critical_theta(pi, chi, pairs, options);
}

double critical_theta(const TransitionMatrix& pi, const Eigen::VectorXd& chi, std::span<const DecisionPair> pairs,
                      const CriticalThetaOptions& options) {
    ResolventSolver solver(options.solver);
    return critical_theta_impl(solver, pi.pi, chi, pairs, options);
}

SupervisionResult optimize(const Pfsa& pfsa, const SupervisorOptions& options) {
    const auto arcs = control_arcs(pfsa);
    std::vector<DecisionPair> pairs;
    pairs.reserve(arcs.size());
    for (const auto& a : arcs) pairs.push_back({a.state, a.target});
    const Eigen::VectorXd chi = pfsa.chi_vector();
    const double tol = options.theta.tie_tolerance;
    const std::size_t cap = options.max_iterations ? options.max_iterations : 10 * pfsa.state_count();

    ResolventSolver solver(options.theta.solver);
    SupervisionResult result;
    std::vector<Pattern> plants;
    Pattern off(arcs.size(), 0);
    CriticalThetaOptions theta_opt = options.theta;
    std::ostringstream trace;
    bool converged = false;
    for (std::size_t k = 1; k <= cap; ++k) {
        const SparseRowMatrix pi = fixed_pattern_matrix(pfsa, arcs, off);
        const double theta = critical_theta_impl(solver, pi, chi, pairs, theta_opt);
        const Eigen::VectorXd nu = solver.solve(pi, chi, theta);
        Pattern next = decision_pattern(nu, pairs, decision_band(tol, theta, chi));
        plants.push_back(off);
        result.thetas.push_back(theta);
        result.disabled_counts.push_back(static_cast<std::size_t>(std::count(next.begin(), next.end(), 1)));
        trace << " [k=" << k << " theta=" << format_double(theta) << " |D|=" << result.disabled_counts.back() << "]";
        result.iterations = k;
        theta_opt.upper = theta;
        if (next == off) {
            converged = true;
            break;
        }
        off = std::move(next);
    }
    if (!converged)
        throw ConvergenceError("supervisor did not reach a fixed point within " + std::to_string(cap) +
                               " iterations:" + trace.str());

    result.theta_min = *std::min_element(result.thetas.begin(), result.thetas.end());
    for (std::size_t a = 0; a < arcs.size(); ++a)
        if (off[a]) result.disabled.insert({arcs[a].state, arcs[a].event});
    result.nu_sharp = {solver.solve(fixed_pattern_matrix(pfsa, arcs, off), chi, result.theta_min), result.theta_min};
    if (options.record_iterations)
        for (const auto& plant : plants)
            result.iteration_measures.push_back(
                solver.solve(fixed_pattern_matrix(pfsa, arcs, plant), chi, result.theta_min));
    return result;
}

Eigen::VectorXd supervised_measure(const Pfsa& pfsa, const ArcSet& disabled, double theta) {
    return renormalized_measure(transition_matrix(apply_disabling(pfsa, disabled)), pfsa.chi_vector(), theta).values;
}

namespace {

// Small plants: dense LU is cheaper than a sparse factorization per subset.
Eigen::VectorXd dense_measure(const Pfsa& pfsa, const std::vector<ControlArc>& arcs, std::uint64_t mask,
                              const Eigen::VectorXd& chi, double theta) {
    const auto n = static_cast<Eigen::Index>(pfsa.state_count());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    std::size_t k = 0;
    for (StateId s = 0; s < pfsa.state_count(); ++s)
        for (const auto& t : pfsa.row(s)) {
            StateId dst = t.dst;
            if (t.controllable) {
                if (mask >> k & 1u) dst = s;
                ++k;
            }
            a(s, dst) -= (1.0 - theta) * t.prob;
        }
    (void)arcs;
    return a.partialPivLu().solve(theta * chi);
}

}  // namespace

SupervisionResult brute_force_optimize(const Pfsa& pfsa, double theta, double tolerance) {
    if (!(theta > 0.0 && theta < 1.0)) throw PreconditionError("theta must lie in (0,1)");
    const auto arcs = control_arcs(pfsa);
    if (arcs.size() > 20)
        throw PreconditionError("brute force refuses " + std::to_string(arcs.size()) + " controllable arcs (max 20)");
    if (pfsa.state_count() > 512) throw PreconditionError("brute force is limited to 512 states");
    const Eigen::VectorXd chi = pfsa.chi_vector();
    const std::uint64_t total = std::uint64_t{1} << arcs.size();
    const auto n = static_cast<Eigen::Index>(pfsa.state_count());

    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 8u));
    std::vector<Eigen::VectorXd> partial(workers, Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity()));
    auto run = [&](auto&& body) {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::uint64_t m = w; m < total; m += workers) body(w, m);
            });
        for (auto& t : pool) t.join();
    };
    run([&](unsigned w, std::uint64_t m) { partial[w] = partial[w].cwiseMax(dense_measure(pfsa, arcs, m, chi, theta)); });
    Eigen::VectorXd best = partial[0];
    for (unsigned w = 1; w < workers; ++w) best = best.cwiseMax(partial[w]);

    // Among dominating subsets prefer the fewest disabled arcs, then the lowest mask.
    std::vector<std::pair<int, std::uint64_t>> found(workers, {INT32_MAX, 0});
    run([&](unsigned w, std::uint64_t m) {
        const int bits = std::popcount(m);
        if (std::make_pair(bits, m) >= found[w]) return;
        const Eigen::VectorXd nu = dense_measure(pfsa, arcs, m, chi, theta);
        if (((best - nu).array() <= tolerance).all()) found[w] = {bits, m};
    });
    const auto winner = *std::min_element(found.begin(), found.end());
    if (winner.first == INT32_MAX)
        throw InvariantError("no disabling set dominates all others elementwise");

    SupervisionResult r;
    for (std::size_t k = 0; k < arcs.size(); ++k)
        if (winner.second >> k & 1u) r.disabled.insert({arcs[k].state, arcs[k].event});
    r.theta_min = theta;
    r.nu_sharp = {dense_measure(pfsa, arcs, winner.second, chi, theta), theta};
    r.iterations = 1;
    r.thetas = {theta};
    r.disabled_counts = {r.disabled.size()};
    return r;
}

void write_supervision(std::ostream& out, const Pfsa& pfsa, const SupervisionResult& result) {
    out << "# theta_min " << format_double(result.theta_min) << " iterations " << result.iterations << '\n';
    write_pfsa(out, pfsa, &result.disabled);
}

}  // namespace nustar
