#pragma once

// Small dense kernels shared by the certifiers: numerical rank and null space,
// least-squares multiplier solve, and inertia of a projected symmetric matrix.

#include "expr.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <stdexcept>
#include <string>

namespace ccopt {

/// Tolerance policy used by every certification.
struct Tolerances {
    double tol_feas = 1e-9;    // absolute feasibility
    double tol_act = 1e-8;     // activity detection
    double tol_rank = 1e-10;   // relative singular value cutoff
    double tol_strict = 1e-8;  // strict sign margin for multipliers and eigenvalues

    /// Throws std::invalid_argument when a value is nonpositive or tol_rank >= tol_strict.
    void validate() const {
        if (!(tol_feas > 0 && tol_act > 0 && tol_rank > 0 && tol_strict > 0))
            throw std::invalid_argument("tolerances must be strictly positive");
        if (!(tol_rank < tol_strict))
            throw std::invalid_argument("tol_rank must be smaller than tol_strict");
    }
};

struct RankResult {
    int rank = 0;
    Matrix null_basis;  // k x (k - rank), orthonormal columns
};

/// Numerical rank of A (m x k) via SVD with cutoff tol_rank * sigma_max, and an
/// orthonormal basis of its null space.
inline RankResult rank_and_nullbasis(const Matrix& a, const Tolerances& tol) {
    const Eigen::Index k = a.cols();
    RankResult out;
    if (k == 0) {
        out.null_basis = Matrix(0, 0);
        return out;
    }
    if (a.rows() == 0) {
        out.null_basis = Matrix::Identity(k, k);
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    int rank = 0;
    if (smax > 0.0)
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > tol.tol_rank * smax) ++rank;
    out.rank = rank;
    out.null_basis = svd.matrixV().rightCols(k - rank);
    return out;
}

struct MultiplierSolve {
    Vector coeffs;
    double residual_norm = 0.0;
    int rank = 0;
};

/// Least-squares (minimum-norm when rank deficient) solution of G * coeffs = target,
/// where the columns of G are the constraint vectors.
inline MultiplierSolve solve_multipliers(const Matrix& g, const Vector& target, const Tolerances& tol) {
    MultiplierSolve out;
    const Eigen::Index k = g.cols();
    if (k == 0 || g.rows() == 0) {
        out.coeffs = Vector::Zero(k);
        out.residual_norm = target.norm();
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    if (smax == 0.0) {
        out.coeffs = Vector::Zero(k);
        out.residual_norm = target.norm();
        return out;
    }
    svd.setThreshold(tol.tol_rank);
    out.rank = static_cast<int>(svd.rank());
    out.coeffs = svd.solve(target);
    out.residual_norm = (g * out.coeffs - target).norm();
    return out;
}

struct Inertia {
    int neg = 0;
    int zero = 0;
    int pos = 0;
    bool operator==(const Inertia&) const = default;
};

/// Eigenvalue sign counts of N' H N. Eigenvalues inside [-tol_strict, tol_strict]
/// count as zero.
inline Inertia restricted_inertia(const Matrix& h, const Matrix& n, const Tolerances& tol) {
    Inertia out;
    if (n.cols() == 0) return out;
    Matrix reduced = n.transpose() * h * n;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double v = eig.eigenvalues()(i);
        if (v < -tol.tol_strict) ++out.neg;
        else if (v > tol.tol_strict) ++out.pos;
        else ++out.zero;
    }
    return out;
}

/// Exact binomial coefficient; throws std::overflow_error past 64 bits.
inline unsigned long long binomial(long long n, long long k) {
    if (k < 0 || n < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 r = 1;
    for (long long i = 1; i <= k; ++i) {
        // r = C(n-k+i-1, i-1) before the update, so r * num / i is exact
        r = r * static_cast<unsigned long long>(n - k + i) / static_cast<unsigned long long>(i);
        if (r > ~0ULL) throw std::overflow_error("binomial coefficient exceeds 64 bits");
    }
    return static_cast<unsigned long long>(r);
}

}  // namespace ccopt
