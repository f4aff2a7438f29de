#include "nustar/measure_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/IterativeLinearSolvers>

#include "nustar/errors.hpp"

namespace nustar {

namespace {

template <class M>
double residual_inf(const M& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    return (a * x - b).template lpNorm<Eigen::Infinity>();
}

}  // namespace

Eigen::VectorXd ResolventSolver::solve(const SparseRowMatrix& pi, const Eigen::VectorXd& chi, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw PreconditionError("theta must lie in (0,1), got " + std::to_string(theta));
    if (pi.rows() != pi.cols() || pi.rows() != chi.size())
        throw PreconditionError("transition matrix and chi dimensions disagree");
    ++solves_;
    const auto n = pi.rows();
    const double chi_norm = chi.lpNorm<Eigen::Infinity>();
    if (chi_norm == 0.0) return Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd b = theta * chi;

    SparseRowMatrix eye(n, n);
    eye.setIdentity();
    SparseRowMatrix a = eye - (1.0 - theta) * pi;

    const bool direct = static_cast<std::size_t>(n) < options_.direct_threshold;
    ColMatrix ac;
    Eigen::BiCGSTAB<SparseRowMatrix, Eigen::IncompleteLUT<double>> iterative;
    auto iterate = [&](const Eigen::VectorXd& rhs, const Eigen::VectorXd* guess) {
        Eigen::VectorXd y;
        if (guess) y = iterative.solveWithGuess(rhs, *guess);
        else y = iterative.solve(rhs);
        if (iterative.info() != Eigen::Success && iterative.info() != Eigen::NoConvergence)
            throw SolverError("BiCGSTAB breakdown", iterative.error());
        return y;
    };
    Eigen::VectorXd x;
    if (direct) {
        ac = a;
        ac.makeCompressed();
        x = solve_direct(ac, b);
    } else {
        a.makeCompressed();
        iterative.preconditioner().setDroptol(1e-6);
        iterative.preconditioner().setFillfactor(4);
        iterative.setTolerance(1e-14);
        iterative.setMaxIterations(static_cast<Eigen::Index>(options_.max_iterations));
        iterative.compute(a);
        if (iterative.info() != Eigen::Success) throw SolverError("ILUT preconditioner failed", 0.0);
        x = iterate(b, warm_.size() == b.size() ? &warm_ : nullptr);
    }
    // The system matrix is I - (1-theta) Pi, whose conditioning degrades like
    // 1/theta. Refining against a residual evaluated in extended precision
    // from the differences x_i - x_j keeps small measure differences accurate.
    for (int refine = 0; refine < 8; ++refine) {
        const Eigen::VectorXd r = structured_residual(pi, chi, theta, x);
        if (r.lpNorm<Eigen::Infinity>() == 0.0) break;
        const Eigen::VectorXd dx = direct ? Eigen::VectorXd(lu_.solve(r)) : iterate(r, nullptr);
        x += dx;
        if (dx.lpNorm<Eigen::Infinity>() <= 4.0 * std::numeric_limits<double>::epsilon() * x.lpNorm<Eigen::Infinity>())
            break;
    }
    const double res = direct ? residual_inf(ac, x, b) : residual_inf(a, x, b);
    if (res > options_.residual_tol * chi_norm)
        throw SolverError(direct ? "sparse LU residual above tolerance" : "BiCGSTAB did not converge", res);
    warm_ = x;
    return x;
}

Eigen::VectorXd ResolventSolver::structured_residual(const SparseRowMatrix& pi, const Eigen::VectorXd& chi, double theta,
                                                     const Eigen::VectorXd& x) {
    const long double t = theta, keep = 1.0L - t;
    Eigen::VectorXd r(x.size());
    for (Eigen::Index i = 0; i < pi.outerSize(); ++i) {
        long double flow = 0.0L, row = 0.0L;
        const long double xi = x[i];
        for (SparseRowMatrix::InnerIterator it(pi, i); it; ++it) {
            flow += static_cast<long double>(it.value()) * (xi - static_cast<long double>(x[it.col()]));
            row += it.value();
        }
        // Substochastic rows leak (1 - row) of x_i.
        r[i] = static_cast<double>(t * static_cast<long double>(chi[i]) - t * xi - keep * flow - keep * (1.0L - row) * xi);
    }
    return r;
}

Eigen::VectorXd ResolventSolver::solve_direct(const ColMatrix& a, const Eigen::VectorXd& b) {
    const auto nnz = a.nonZeros();
    const bool same = analyzed_ && outer_.size() == static_cast<std::size_t>(a.outerSize() + 1) &&
                      inner_.size() == static_cast<std::size_t>(nnz) &&
                      std::equal(outer_.begin(), outer_.end(), a.outerIndexPtr()) &&
                      std::equal(inner_.begin(), inner_.end(), a.innerIndexPtr());
    if (!same) {
        lu_.analyzePattern(a);
        outer_.assign(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1);
        inner_.assign(a.innerIndexPtr(), a.innerIndexPtr() + nnz);
        analyzed_ = true;
    }
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: " + lu_.lastErrorMessage(), 0.0);
    return lu_.solve(b);
}

}  // namespace nustar
