#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "sfplr/fpca.hpp"
#include "sfplr/grid.hpp"
#include "sfplr/sample.hpp"

namespace sfplr {

/// Functional covariate X, scalar covariates Z (n x p, p may be 0) and
/// response Y. p = 0 degenerates to a pure functional linear model.
struct MixedDataset {
    FunctionalSample X;
    Eigen::MatrixXd Z;
    Eigen::VectorXd Y;

    MixedDataset(FunctionalSample x, Eigen::MatrixXd z, Eigen::VectorXd y)
        : X(std::move(x)), Z(std::move(z)), Y(std::move(y)) {
        if (Z.rows() != X.n() || Y.size() != X.n())
            throw std::invalid_argument("MixedDataset: inconsistent sample sizes");
        if (!Z.allFinite() || !Y.allFinite())
            throw std::invalid_argument("MixedDataset: non-finite entries");
    }

    Eigen::Index n() const { return X.n(); }
    Eigen::Index p() const { return Z.cols(); }
};

struct FitConfig {
    double bandwidth_constant = 3.0;  // b = c * n^{-1/5}
    int k_max = 0;                    // 0 = auto: min(20, n - 4)
    bool center = true;
};

struct WeightDiagnostics {
    double min_self_weight = 0.0;
    double max_self_weight = 0.0;
    double mean_active_neighbors = 0.0;  // avg # of j with K(d_ij / b) > 0 per row
};

/// Quartic kernel K(u) = 15 (1 - u^2)^2 / 16 on |u| <= 1, else 0.
inline double quartic_kernel(double u) {
    if (std::abs(u) > 1.0) return 0.0;
    const double v = 1.0 - u * u;
    return 15.0 * v * v / 16.0;
}

/// Pairwise L2 semi-metric matrix via the weighted Gram identity
/// d^2(X_i, X_j) = G_ii + G_jj - 2 G_ij.
inline Eigen::MatrixXd pairwise_distances(const FunctionalSample& s) {
    const Eigen::MatrixXd& a = s.data();
    Eigen::MatrixXd gram = (a * s.grid().quad_weights().asDiagonal()) * a.transpose();
    Eigen::VectorXd diag = gram.diagonal();
    Eigen::MatrixXd d2 = diag.replicate(1, s.n()) + diag.transpose().replicate(s.n(), 1) -
                         2.0 * gram;
    return d2.cwiseMax(0.0).cwiseSqrt();
}

/// Nadaraya-Watson weight matrix W[i][j] = K(d(X_i, X_j)/b) / sum_l K(d(X_i, X_l)/b).
/// The self term keeps every denominator positive; rows sum to 1.
inline Eigen::MatrixXd nw_weights(const FunctionalSample& s, double b,
                                  WeightDiagnostics* info = nullptr) {
    if (!(b > 0.0)) throw std::invalid_argument("nw_weights: bandwidth must be positive");
    const Eigen::Index n = s.n();
    Eigen::MatrixXd w = pairwise_distances(s);
    double active = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            w(i, j) = quartic_kernel(w(i, j) / b);
            if (w(i, j) > 0.0) active += 1.0;
        }
        w.row(i) /= w.row(i).sum();
    }
    if (info) {
        info->min_self_weight = w.diagonal().minCoeff();
        info->max_self_weight = w.diagonal().maxCoeff();
        info->mean_active_neighbors = active / static_cast<double>(n);
    }
    return w;
}

/// Z~ = Z - W Z, Y~ = Y - W Y.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> partial_residualize(
    const Eigen::MatrixXd& w, const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
    if (w.rows() != w.cols() || w.rows() != z.rows() || y.size() != z.rows())
        throw std::invalid_argument("partial_residualize: dimension mismatch");
    return {z - w * z, y - w * y};
}

namespace detail {

// Rank-revealing QR of Z~ kept for the bootstrap re-solves; beta = P R^{-1} Q^T y.
struct LeastSquares {
    Eigen::MatrixXd thin_q;                   // n x p
    Eigen::MatrixXd r;                        // p x p upper triangular
    Eigen::PermutationMatrix<Eigen::Dynamic> perm;

    static LeastSquares factorize(const Eigen::MatrixXd& z) {
        const Eigen::Index p = z.cols();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
        Eigen::VectorXd rdiag = qr.matrixR().topLeftCorner(p, p).diagonal().cwiseAbs();
        const double rmax = rdiag.size() ? rdiag.maxCoeff() : 0.0;
        Eigen::Index rank = 0;
        for (Eigen::Index j = 0; j < p; ++j)
            if (rdiag(j) > 1e-12 * rmax && rdiag(j) > 0.0) ++rank;
        const double cond = (rank == p && rdiag(p - 1) > 0.0)
                                ? rdiag(0) / rdiag(p - 1)
                                : std::numeric_limits<double>::infinity();
        if (rank < p || cond > 1e12) {
            std::string cols;
            for (Eigen::Index j = rank; j < p; ++j) {
                if (!cols.empty()) cols += ", ";
                cols += std::to_string(qr.colsPermutation().indices()(j));
            }
            throw std::runtime_error(
                "estimate_beta: singular design (condition number > 1e12), offending "
                "column(s): " + cols);
        }
        LeastSquares ls;
        ls.thin_q = qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), p);
        ls.r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
        ls.perm = qr.colsPermutation();
        return ls;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& y) const {
        Eigen::VectorXd c = thin_q.transpose() * y;
        return perm * r.triangularView<Eigen::Upper>().solve(c).eval();
    }
};

}  // namespace detail

/// Least-squares beta~ = (Z~^T Z~)^{-1} Z~^T Y~ via a rank-revealing
/// orthogonal factorization. Throws when the partialled design is singular
/// (condition number above 1e12), naming the offending columns.
inline Eigen::VectorXd estimate_beta(const Eigen::MatrixXd& ztilde,
                                     const Eigen::VectorXd& ytilde) {
    if (ztilde.rows() != ytilde.size())
        throw std::invalid_argument("estimate_beta: dimension mismatch");
    if (ztilde.cols() == 0) return Eigen::VectorXd();
    return detail::LeastSquares::factorize(ztilde).solve(ytilde);
}

namespace detail {

// Eq.-style score regression coefficients: c_j = n^{-1} sum_i s_ij d_i / lambda_j.
inline Eigen::VectorXd rho_coefficients(const Eigen::VectorXd& dtilde, const EigenSystem& es,
                                        Eigen::Index k) {
    const double n = static_cast<double>(dtilde.size());
    Eigen::VectorXd coef(k);
    for (Eigen::Index j = 0; j < k; ++j)
        coef(j) = es.scores.col(j).dot(dtilde) / (n * es.eigenvalues(j));
    return coef;
}

}  // namespace detail

/// Regularized functional slope: least-squares regression of D~ on the first
/// k FPC scores, mapped back to a curve in the eigenfunction span.
inline Curve estimate_rho(const FunctionalSample& x, const Eigen::VectorXd& dtilde,
                          const EigenSystem& es, int k) {
    if (dtilde.size() != x.n() || es.scores.rows() != x.n())
        throw std::invalid_argument("estimate_rho: dimension mismatch");
    if (k < 1 || k > es.rank)
        throw std::invalid_argument("estimate_rho: truncation level " + std::to_string(k) +
                                    " exceeds the numerical rank " + std::to_string(es.rank));
    return es.eigenfunctions.leftCols(k) * detail::rho_coefficients(dtilde, es, k);
}

/// SIC(k) = log(RSS_k / n) + log(n) k / (n - k - 2), minimized over
/// k = 1..k_max; ties break toward smaller k. RSS_k/n is floored at
/// 1e-15 * mean(D~^2) so that sub-epsilon residuals of noiseless data do
/// not dominate the criterion through the log.
inline int sic_select_k(const FunctionalSample& x, const Eigen::VectorXd& dtilde,
                        const EigenSystem& es, int k_max) {
    const Eigen::Index n = dtilde.size();
    if (k_max < 1) throw std::invalid_argument("sic_select_k: k_max must be >= 1");
    if (n - k_max - 2 <= 0)
        throw std::invalid_argument("sic_select_k: need n - k_max - 2 > 0");
    if (es.rank < 1) throw std::invalid_argument("sic_select_k: eigensystem has rank 0");
    const int k_cap = static_cast<int>(std::min<Eigen::Index>(k_max, es.rank));

    const double mean_sq = dtilde.squaredNorm() / static_cast<double>(n);
    const double floor = std::max(1e-300, 1e-15 * mean_sq);
    Eigen::VectorXd coef = detail::rho_coefficients(dtilde, es, k_cap);

    int best_k = 1;
    double best_sic = std::numeric_limits<double>::infinity();
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(n);
    for (int k = 1; k <= k_cap; ++k) {
        fitted += coef(k - 1) * es.scores.col(k - 1);
        const double rss_over_n = std::max((dtilde - fitted).squaredNorm() / n, floor);
        const double sic = std::log(rss_over_n) +
                           std::log(static_cast<double>(n)) * k / static_cast<double>(n - k - 2);
        if (sic < best_sic) {
            best_sic = sic;
            best_k = k;
        }
    }
    return best_k;
}

/// Two-step SFPLR fit result plus the read-only caches the wild bootstrap
/// reuses across replicates (everything cached depends only on X and Z).
struct SFPLRFit {
    Eigen::VectorXd beta;
    Curve rho;
    int k_selected = 0;
    double bandwidth = 0.0;
    Eigen::VectorXd residuals;
    EigenSystem eigensystem;
    WeightDiagnostics weights_info;

    Eigen::MatrixXd weight_matrix;   // W_b
    Eigen::MatrixXd ztilde;          // Z - W Z
    detail::LeastSquares beta_solver;
    Eigen::MatrixXd scores_k;        // n x k centered scores
    Eigen::MatrixXd raw_scores_k;    // n x k  <X_i, e_j> with raw curves
    Eigen::VectorXd lambda_k;
    Eigen::VectorXd fitted;          // Y - residuals
};

/// Full two-step estimation: NW partial residualization for beta~, then the
/// FPCA-regularized slope with SIC-selected truncation, then residuals
/// U_i = Y_i - Z_i^T beta~ - <X_i, rho^>.
inline SFPLRFit fit(const MixedDataset& ds, const FitConfig& cfg) {
    const Eigen::Index n = ds.n();
    if (n < 8) throw std::invalid_argument("fit: need n >= 8");
    if (!(cfg.bandwidth_constant > 0.0))
        throw std::invalid_argument("fit: bandwidth constant must be positive");
    int k_max = cfg.k_max > 0 ? cfg.k_max : static_cast<int>(std::min<Eigen::Index>(20, n - 4));
    if (k_max < 1 || k_max > n - 3)
        throw std::invalid_argument("fit: k_max must satisfy 1 <= k_max <= n - 3");

    SFPLRFit out;
    out.bandwidth = cfg.bandwidth_constant * std::pow(static_cast<double>(n), -0.2);
    out.weight_matrix = nw_weights(ds.X, out.bandwidth, &out.weights_info);

    Eigen::VectorXd dtilde;
    if (ds.p() > 0) {
        auto [ztilde, ytilde] = partial_residualize(out.weight_matrix, ds.Z, ds.Y);
        out.ztilde = std::move(ztilde);
        out.beta_solver = detail::LeastSquares::factorize(out.ztilde);
        out.beta = out.beta_solver.solve(ytilde);
        dtilde = ds.Y - ds.Z * out.beta;
    } else {
        dtilde = ds.Y;
    }

    out.eigensystem = empirical_eigen(ds.X, cfg.center);
    const EigenSystem& es = out.eigensystem;
    if (es.rank == 0) {
        // degenerate functional covariate: nothing to regress on
        out.rho = Curve::Zero(ds.X.grid_size());
        out.residuals = dtilde;
        out.fitted = ds.Y - out.residuals;
        return out;
    }

    out.k_selected = sic_select_k(ds.X, dtilde, es, k_max);
    out.rho = estimate_rho(ds.X, dtilde, es, out.k_selected);

    out.scores_k = es.scores.leftCols(out.k_selected);
    out.raw_scores_k =
        (ds.X.data() * ds.X.grid().quad_weights().asDiagonal()) *
        es.eigenfunctions.leftCols(out.k_selected);
    out.lambda_k = es.eigenvalues.head(out.k_selected);

    Eigen::VectorXd coef = detail::rho_coefficients(dtilde, es, out.k_selected);
    out.residuals = dtilde - out.raw_scores_k * coef;
    out.fitted = ds.Y - out.residuals;
    return out;
}

}  // namespace sfplr
