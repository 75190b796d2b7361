#pragma once

#include <vector>

#include "rmlab/matgen.hpp"

namespace rmlab::linalg {

/// Dense symmetric matrix, full storage, entries[i][j] == entries[j][i] as stored.
struct SymmetricMatrix {
    int dim = 0;
    std::vector<double> entries;  // dim * dim, row-major

    SymmetricMatrix() = default;
    explicit SymmetricMatrix(int d)
        : dim(d), entries(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0.0) {}

    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * dim + j]; }
    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * dim + j]; }
};

/// Row sums W_i of W = XX^T/n plus their total 1^T W 1.
struct RowSumVector {
    std::vector<double> values;
    double total = 0.0;  // (1/n) sum_k (column sum k)^2
};

/// Leading two eigenvalues of W = XX^T/n with the dominant eigenvector.
struct EigenPairTop {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::vector<double> v1;  // unit norm, p-side, sign fixed so sum(v1) >= 0
    int iterations = 0;      // total matrix applications over both eigenvalue runs
    double residual = 0.0;   // ||W v1 - lambda1 v1||
};

/// Dominant eigenpair only (cheaper when the second eigenvalue is not needed).
struct TopEigen {
    double lambda = 0.0;
    std::vector<double> v;
    int iterations = 0;
    double residual = 0.0;
};

/// Split of the all-ones vector along the dominant eigenvector.
struct OnesDecomposition {
    std::vector<double> v_component;  // (1 . v1) v1
    std::vector<double> r;            // 1 - v_component, orthogonal to v1
    double r_norm_sq = 0.0;
    double identity_residual = 0.0;   // relative defect of the two-term energy split
};

inline constexpr double kDefaultEigTol = 1e-12;
inline constexpr int kDefaultEigMaxIter = 100000;
inline constexpr int kDefaultSpectrumLimit = 1024;

/// W = (1/n) X X^T. Upper triangle computed once and mirrored, so the result
/// is symmetric as stored. Throws EmptyInput for a 0-sized matrix.
SymmetricMatrix covariance(const RealMatrix& x);

/// The dual Gram side (1/n) X^T X, sharing the nonzero spectrum of W.
SymmetricMatrix gram_other_side(const RealMatrix& x);

/// Row sums of covariance(x) in O(pn) time via column sums, without forming W.
RowSumVector row_sums(const RealMatrix& x);

/// One-step estimate sum_i W_i / p == sum_k (column sum k)^2 / (np).
double estimator_one(const RealMatrix& x);

/// Two-step estimate sum_i W_i^2 / sum_i W_i.
/// Throws DegenerateDenominator when |sum_i W_i| < 1e-12 * p.
double estimator_two(const RealMatrix& x);

/// Leading two eigenvalues of W = XX^T/n by power iteration with deflation.
///
/// Iterates on the smaller Gram side (X^T X / n when n < p) starting from the
/// normalized all-ones vector, stops when the Rayleigh quotient is stable to
/// tol (relative) and the residual is below tol * lambda1, then deflates the
/// converged direction and repeats for lambda2. When the iteration stalls on
/// a near-degenerate pair, a 2x2 Rayleigh-Ritz refinement on the span of the
/// iterate and its residual direction resolves the cluster. The eigenvector
/// returned is mapped back to the p side. Throws NoConvergence after
/// max_iter applications (one retry from a deterministic alternate start).
EigenPairTop top_two_eigenvalues(const RealMatrix& x, double tol = kDefaultEigTol,
                                 int max_iter = kDefaultEigMaxIter);

/// Dominant eigenpair of W = XX^T/n only. Starts with implicit X(X^T v)/n
/// products and materializes the Gram matrix if the iteration runs long.
TopEigen largest_eigenpair(const RealMatrix& x, double tol = kDefaultEigTol,
                           int max_iter = kDefaultEigMaxIter);

/// As top_two_eigenvalues but for an already formed symmetric PSD matrix.
EigenPairTop top_two_of(const SymmetricMatrix& w, double tol = kDefaultEigTol,
                        int max_iter = kDefaultEigMaxIter);

/// All eigenvalues of w, descending, by cyclic Jacobi rotations. Stops once
/// the off-diagonal Frobenius norm is below 1e-12 * ||w||_F.
/// Throws SizeExceeded when w.dim > size_limit.
std::vector<double> full_spectrum(const SymmetricMatrix& w, int size_limit = kDefaultSpectrumLimit);

/// Split 1 = v_component + r with v_component = (1 . v1) v1 and check the
/// energy identity ||W1 - l1||^2 = (lambda1 - l)^2 ||v_component||^2 +
/// ||Wr - lr||^2. identity_residual is the defect relative to ||W1 - l1||^2
/// (0 when that norm vanishes). Requires pair.v1 of unit norm.
OnesDecomposition decompose_ones(const SymmetricMatrix& w, const EigenPairTop& pair, double l);

/// Frobenius norm of a symmetric matrix.
double frobenius_norm(const SymmetricMatrix& w);

}  // namespace rmlab::linalg
