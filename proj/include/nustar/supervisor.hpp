#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "nustar/pfsa.hpp"

namespace nustar {

// A (source, target) pair whose measure ordering drives a disabling decision.
struct DecisionPair {
    StateId from;
    StateId to;
};

struct CriticalThetaOptions {
    double upper = 0.99;
    double floor = 1e-12;
    // Return `floor` instead of failing when nothing stabilizes above it.
    bool clamp_to_floor = false;
    // Measures closer than tie_tolerance * theta count as equal; nu scales
    // with theta, so the band is fixed on the un-renormalized scale.
    double tie_tolerance = 1e-9;
    // Extra probe at theta * far_probe that must also agree.
    double far_probe = 1.0 / 64.0;
    SolverOptions solver;
};

struct SupervisorOptions {
    CriticalThetaOptions theta;
    // 0 means 10 * state count.
    std::size_t max_iterations = 0;
    // Re-evaluate every iteration's plant at theta_min (for monotonicity checks).
    bool record_iterations = true;
};

struct SupervisionResult {
    ArcSet disabled;
    MeasureVector nu_sharp;
    double theta_min = 0.0;
    std::size_t iterations = 0;
    std::vector<double> thetas;                    // critical theta of each iteration
    std::vector<std::size_t> disabled_counts;      // |D^[k]| after each iteration
    std::vector<Eigen::VectorXd> iteration_measures;  // nu^[k] evaluated at theta_min
};

// Disabling decision shared by the supervisor and the ordering checks.
inline bool should_disable(double nu_from, double nu_to, double tol) { return nu_to < nu_from - tol; }

// Decision pairs default to the off-diagonal nonzeros of pi.
double critical_theta(const TransitionMatrix& pi, const Eigen::VectorXd& chi, const CriticalThetaOptions& options = {});
double critical_theta(const TransitionMatrix& pi, const Eigen::VectorXd& chi, std::span<const DecisionPair> pairs,
                      const CriticalThetaOptions& options = {});

SupervisionResult optimize(const Pfsa& pfsa, const SupervisorOptions& options = {});

// Exhaustive oracle over all subsets of the controllable set, evaluated at `theta`.
SupervisionResult brute_force_optimize(const Pfsa& pfsa, double theta, double tolerance = 1e-9);

// Measure of `pfsa` under an arbitrary disabling set.
Eigen::VectorXd supervised_measure(const Pfsa& pfsa, const ArcSet& disabled, double theta);

void write_supervision(std::ostream& out, const Pfsa& pfsa, const SupervisionResult& result);

}  // namespace nustar
