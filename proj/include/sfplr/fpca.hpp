#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "sfplr/grid.hpp"
#include "sfplr/sample.hpp"

namespace sfplr {

/// Empirical eigenanalysis of the covariance operator of a functional
/// sample under the grid quadrature inner product.
///
/// `eigenvalues` holds the full clamped spectrum (descending, length
/// min(n, G)); `eigenfunctions` / `scores` keep only the `rank` leading
/// components whose eigenvalue exceeds 1e-12 * lambda_1 — smaller ones are
/// treated as zero and excluded from inversions.
struct EigenSystem {
    Eigen::VectorXd eigenvalues;      // descending, >= 0
    Eigen::MatrixXd eigenfunctions;   // G x rank, unit quadrature norm
    Eigen::MatrixXd scores;           // n x rank, <X_i - mean, e_j>
    Grid grid;
    Curve mean;                       // curve subtracted before the eigensolve (zero if not centered)
    bool centered = false;
    Eigen::Index rank = 0;
};

namespace detail {

// Deterministic sign convention: the entry of largest absolute value is
// made positive (first such index on ties).
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> e) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index k = 0; k < e.size(); ++k) {
        const double a = std::abs(e(k));
        if (a > best) {
            best = a;
            imax = k;
        }
    }
    if (e(imax) < 0.0) e = -e;
}

}  // namespace detail

/// Eigenpairs of Gamma_n = n^{-1} sum_i X_i (x) X_i (on centered data when
/// `center` is set). Solves the n x n weighted Gram problem when n <= G and
/// the G x G weighted covariance problem otherwise; both carry the same
/// nonzero spectrum.
inline EigenSystem empirical_eigen(const FunctionalSample& s, bool center) {
    const Eigen::Index n = s.n();
    const Eigen::Index g = s.grid_size();
    if (center && n < 2)
        throw std::invalid_argument("empirical_eigen: centering needs n >= 2");

    Curve mean = Curve::Zero(g);
    Eigen::MatrixXd a = s.data();
    if (center) {
        mean = a.colwise().mean().transpose();
        a.rowwise() -= mean.transpose();
    }
    const Eigen::VectorXd& w = s.grid().quad_weights();
    const Eigen::Index m = std::min(n, g);

    Eigen::VectorXd values = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd functions(g, 0);

    if (n <= g) {
        // dual problem: M = (1/n) A W A^T, eigenfunction = A^T alpha / sqrt(n lambda)
        Eigen::MatrixXd aw = a * w.asDiagonal();
        Eigen::MatrixXd gram = (aw * a.transpose()) / static_cast<double>(n);
        gram = ((gram + gram.transpose()) / 2.0).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("empirical_eigen: eigensolver failed");
        // ascending -> descending, clamp tiny negatives
        for (Eigen::Index j = 0; j < m; ++j)
            values(j) = std::max(0.0, solver.eigenvalues()(m - 1 - j));
        const double zero_tol = 1e-12 * values(0);
        Eigen::Index rank = 0;
        while (rank < m && values(rank) > zero_tol && values(rank) > 0.0) ++rank;
        functions.resize(g, rank);
        for (Eigen::Index j = 0; j < rank; ++j) {
            Eigen::VectorXd alpha = solver.eigenvectors().col(m - 1 - j);
            functions.col(j) = a.transpose() * alpha / std::sqrt(n * values(j));
            detail::fix_sign(functions.col(j));
        }
    } else {
        // primal problem on the symmetrized kernel: B = S C S with
        // S = diag(sqrt(w)), C = (1/n) A^T A; eigenfunction = u / sqrt(w)
        Eigen::VectorXd sqrtw = w.array().sqrt();
        Eigen::MatrixXd b = a * sqrtw.asDiagonal();
        Eigen::MatrixXd cov = (b.transpose() * b) / static_cast<double>(n);
        cov = ((cov + cov.transpose()) / 2.0).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("empirical_eigen: eigensolver failed");
        for (Eigen::Index j = 0; j < m; ++j)
            values(j) = std::max(0.0, solver.eigenvalues()(g - 1 - j));
        const double zero_tol = 1e-12 * values(0);
        Eigen::Index rank = 0;
        while (rank < m && values(rank) > zero_tol && values(rank) > 0.0) ++rank;
        functions.resize(g, rank);
        for (Eigen::Index j = 0; j < rank; ++j) {
            functions.col(j) = solver.eigenvectors().col(g - 1 - j).cwiseQuotient(sqrtw);
            detail::fix_sign(functions.col(j));
        }
    }

    EigenSystem es{std::move(values), Eigen::MatrixXd(), Eigen::MatrixXd(), s.grid(),
                   std::move(mean), center, functions.cols()};
    es.scores = (a * w.asDiagonal()) * functions;  // n x rank
    es.eigenfunctions = std::move(functions);
    return es;
}

/// Scores of an arbitrary sample against the eigensystem's basis:
/// entry (i, j) = <X_i - mean, e_j> under the grid quadrature.
inline Eigen::MatrixXd fpc_scores(const FunctionalSample& s, const EigenSystem& es) {
    if (!s.grid().approx_equals(es.grid))
        throw std::invalid_argument("fpc_scores: sample grid does not match eigensystem grid");
    Eigen::MatrixXd a = s.data();
    if (es.centered) a.rowwise() -= es.mean.transpose();
    return (a * es.grid.quad_weights().asDiagonal()) * es.eigenfunctions;
}

/// Smallest k with (sum_{j<=k} lambda_j^2) / (sum_j lambda_j^2) >= threshold.
/// Used to choose the span of the random projection directions.
inline int variance_ratio_index(const Eigen::VectorXd& eigenvalues, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("variance_ratio_index: threshold must be in (0, 1)");
    if (eigenvalues.size() == 0 || (eigenvalues.array() < 0.0).any())
        throw std::invalid_argument("variance_ratio_index: eigenvalues must be nonnegative");
    const double total = eigenvalues.array().square().sum();
    if (total <= 0.0)
        throw std::invalid_argument("variance_ratio_index: all eigenvalues are zero");
    double cum = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        cum += eigenvalues(k) * eigenvalues(k);
        if (cum / total >= threshold) return static_cast<int>(k + 1);
    }
    return static_cast<int>(eigenvalues.size());
}

}  // namespace sfplr
