#pragma once

#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "nustar/pfsa.hpp"

namespace nustar {

// Solves [I - (1-theta) Pi] nu = theta chi repeatedly. The symbolic
// factorization is reused while the sparsity pattern of Pi stays fixed, so
// callers that only change values (disabling with explicit zeros, new theta)
// pay for numeric factorization only.
class ResolventSolver {
public:
    explicit ResolventSolver(SolverOptions options = {}) : options_(options) {}

    Eigen::VectorXd solve(const SparseRowMatrix& pi, const Eigen::VectorXd& chi, double theta);

    std::size_t solves() const noexcept { return solves_; }

private:
    using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

    Eigen::VectorXd solve_direct(const ColMatrix& a, const Eigen::VectorXd& b);
    // theta chi - [theta x + (1-theta)(x - Pi x)] with (x - Pi x) formed from
    // differences, accumulated in long double. Assumes stochastic rows.
    static Eigen::VectorXd structured_residual(const SparseRowMatrix& pi, const Eigen::VectorXd& chi, double theta,
                                               const Eigen::VectorXd& x);

    SolverOptions options_;
    Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu_;
    std::vector<int> outer_;
    std::vector<int> inner_;
    bool analyzed_ = false;
    Eigen::VectorXd warm_;
    std::size_t solves_ = 0;
};

}  // namespace nustar
