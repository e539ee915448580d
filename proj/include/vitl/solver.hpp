#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "vitl/errors.hpp"
#include "vitl/kernel.hpp"

namespace vitl {

// Coefficient and output matrices share the (tm) x d layout: row m*i + j holds
// the vector for identity i, emotion j.

template <typename Scalar>
struct SymmetricEigen {
    Vector<Scalar> values;  // ascending, clamped to >= 0
    Matrix<Scalar> vectors;
};

/// Eigendecomposition of a symmetric PSD matrix. Eigenvalues in
/// [-1e-10 ||M||_2, 0) are floating-point noise and are clamped to zero;
/// anything more negative is reported as a NumericalError.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> psd_eigen(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
    using Scalar = typename Derived::Scalar;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(m.eval());
    if (es.info() != Eigen::Success) throw NumericalError(what + ": eigendecomposition failed");
    SymmetricEigen<Scalar> out{es.eigenvalues(), es.eigenvectors()};
    if (out.values.size() == 0) return out;
    const Scalar norm = detail::spectral_norm_symmetric(es);
    const Scalar floor = -Scalar(1e-10) * norm;
    for (Index k = 0; k < out.values.size(); ++k) {
        if (out.values(k) < floor) {
            throw NumericalError(what + ": matrix is not positive semidefinite (eigenvalue " +
                                 std::to_string(static_cast<double>(out.values(k))) + ")");
        }
        out.values(k) = std::max(out.values(k), Scalar(0));
    }
    return out;
}

namespace detail {

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& a, const char* what) {
    using Scalar = typename Derived::Scalar;
    if (a.rows() != a.cols()) throw InvalidArgument(std::string(what) + ": matrix is not square");
    if (a.size() > 0 && (a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12)) {
        throw InvalidArgument(std::string(what) + ": matrix is not symmetric");
    }
}

template <typename Scalar>
void require_positive_lambda(Scalar lambda, const char* what) {
    if (!(lambda > Scalar(0)) || !std::isfinite(static_cast<double>(lambda))) {
        throw InvalidArgument(std::string(what) + ": lambda must be positive and finite");
    }
}

}  // namespace detail

/// (K + n lambda I)^{-1} Y with n = rows(Y), via a Cholesky factorization.
template <typename DerivedK, typename DerivedY>
Matrix<typename DerivedK::Scalar> solve_ridge_identity(const Eigen::MatrixBase<DerivedK>& k,
                                                       const Eigen::MatrixBase<DerivedY>& y,
                                                       typename DerivedK::Scalar lambda) {
    using Scalar = typename DerivedK::Scalar;
    detail::require_positive_lambda(lambda, "solve_ridge_identity");
    if (k.rows() != k.cols() || k.rows() != y.rows()) throw DimensionError("solve_ridge_identity: K and Y sizes disagree");
    const Index n = y.rows();
    Matrix<Scalar> shifted = k;
    shifted.diagonal().array() += Scalar(n) * lambda;
    Eigen::LLT<Matrix<Scalar>> llt(shifted);
    if (llt.info() != Eigen::Success) throw NumericalError("solve_ridge_identity: Cholesky factorization failed");
    return llt.solve(y);
}

/// Solves K C A + n lambda C = Y by diagonalizing K = U diag(l) U^T and
/// A = V diag(s) V^T. Every denominator l_a s_b + n lambda is >= n lambda > 0,
/// so singular (low-rank) A is fine.
template <typename DerivedK, typename DerivedY, typename DerivedA>
Matrix<typename DerivedK::Scalar> solve_sylvester(const Eigen::MatrixBase<DerivedK>& k,
                                                  const Eigen::MatrixBase<DerivedY>& y,
                                                  const Eigen::MatrixBase<DerivedA>& a,
                                                  typename DerivedK::Scalar lambda) {
    using Scalar = typename DerivedK::Scalar;
    detail::require_positive_lambda(lambda, "solve_sylvester");
    detail::require_symmetric(a, "solve_sylvester (A)");
    if (k.rows() != k.cols() || k.rows() != y.rows()) throw DimensionError("solve_sylvester: K and Y sizes disagree");
    if (a.rows() != y.cols()) throw DimensionError("solve_sylvester: A and Y sizes disagree");
    const Scalar shift = Scalar(y.rows()) * lambda;

    const auto ek = psd_eigen(k, "solve_sylvester (K)");
    SymmetricEigen<Scalar> ea;
    try {
        ea = psd_eigen(a, "solve_sylvester (A)");
    } catch (const NumericalError& e) {
        throw InvalidArgument(e.what());
    }

    Matrix<Scalar> rotated = ek.vectors.transpose() * y * ea.vectors;
    for (Index b = 0; b < rotated.cols(); ++b) {
        for (Index r = 0; r < rotated.rows(); ++r) {
            const Scalar denom = ek.values(r) * ea.values(b) + shift;
            if (!(denom >= shift)) throw NumericalError("solve_sylvester: denominator below n*lambda");
            rotated(r, b) /= denom;
        }
    }
    return ek.vectors * rotated * ea.vectors.transpose();
}

/// Same system as solve_sylvester with K = KX (x) KTheta, using only the
/// eigendecompositions of KX (t x t), KTheta (m x m) and A (d x d).
template <typename DerivedX, typename DerivedT, typename DerivedY, typename DerivedA>
Matrix<typename DerivedX::Scalar> solve_kron(const Eigen::MatrixBase<DerivedX>& kx,
                                             const Eigen::MatrixBase<DerivedT>& ktheta,
                                             const Eigen::MatrixBase<DerivedY>& y,
                                             const Eigen::MatrixBase<DerivedA>& a,
                                             typename DerivedX::Scalar lambda) {
    using Scalar = typename DerivedX::Scalar;
    detail::require_positive_lambda(lambda, "solve_kron");
    detail::require_symmetric(a, "solve_kron (A)");
    const Index t = kx.rows();
    const Index m = ktheta.rows();
    if (kx.cols() != t || ktheta.cols() != m) throw DimensionError("solve_kron: factors must be square");
    if (y.rows() != t * m) {
        throw DimensionError("solve_kron: Y has " + std::to_string(y.rows()) + " rows, expected t*m = " +
                             std::to_string(t * m));
    }
    if (a.rows() != y.cols()) throw DimensionError("solve_kron: A and Y sizes disagree");
    const Scalar shift = Scalar(t * m) * lambda;

    const auto ex = psd_eigen(kx, "solve_kron (KX)");
    const auto et = psd_eigen(ktheta, "solve_kron (KTheta)");
    SymmetricEigen<Scalar> ea;
    try {
        ea = psd_eigen(a, "solve_kron (A)");
    } catch (const NumericalError& e) {
        throw InvalidArgument(e.what());
    }

    // Column c of Y V, viewed column-major as an m x t matrix M with
    // M(j, i) = row m*i + j; (UX (x) UT)^T vec(M) = vec(UT^T M UX).
    const Matrix<Scalar> yv = y * ea.vectors;
    Matrix<Scalar> out(t * m, y.cols());
    for (Index c = 0; c < y.cols(); ++c) {
        const Eigen::Map<const Matrix<Scalar>> block(yv.col(c).data(), m, t);
        Matrix<Scalar> rotated = et.vectors.transpose() * block * ex.vectors;
        for (Index i = 0; i < t; ++i) {
            for (Index j = 0; j < m; ++j) {
                const Scalar denom = ex.values(i) * et.values(j) * ea.values(c) + shift;
                if (!(denom >= shift)) throw NumericalError("solve_kron: denominator below tm*lambda");
                rotated(j, i) /= denom;
            }
        }
        Eigen::Map<Matrix<Scalar>> dst(out.col(c).data(), m, t);
        dst.noalias() = et.vectors * rotated * ex.vectors.transpose();
    }
    return out * ea.vectors.transpose();
}

/// 1/(2n) ||K C A - Y||_F^2 + lambda/2 Tr(K C A C^T), n = rows(Y).
template <typename DerivedC, typename DerivedK, typename DerivedY, typename DerivedA>
typename DerivedC::Scalar objective_value(const Eigen::MatrixBase<DerivedC>& c,
                                          const Eigen::MatrixBase<DerivedK>& k,
                                          const Eigen::MatrixBase<DerivedY>& y,
                                          const Eigen::MatrixBase<DerivedA>& a,
                                          typename DerivedC::Scalar lambda) {
    using Scalar = typename DerivedC::Scalar;
    const Scalar n = Scalar(y.rows());
    const Matrix<Scalar> kc = k * c;
    const Matrix<Scalar> kca = kc * a;
    const Scalar fit = (kca - y).squaredNorm() / (Scalar(2) * n);
    const Scalar reg = (kc.cwiseProduct(c * a)).sum();
    return fit + lambda / Scalar(2) * reg;
}

/// Gradient of objective_value in C: (1/n) K (K C A - Y) A + lambda K C A.
template <typename DerivedC, typename DerivedK, typename DerivedY, typename DerivedA>
Matrix<typename DerivedC::Scalar> objective_gradient(const Eigen::MatrixBase<DerivedC>& c,
                                                     const Eigen::MatrixBase<DerivedK>& k,
                                                     const Eigen::MatrixBase<DerivedY>& y,
                                                     const Eigen::MatrixBase<DerivedA>& a,
                                                     typename DerivedC::Scalar lambda) {
    using Scalar = typename DerivedC::Scalar;
    if (k.rows() != c.rows() || y.rows() != c.rows() || a.rows() != c.cols() || y.cols() != c.cols()) {
        throw DimensionError("objective_gradient: inconsistent shapes");
    }
    const Scalar n = Scalar(y.rows());
    const Matrix<Scalar> kca = k * c * a;
    return (k * (kca - y) * a) / n + lambda * kca;
}

template <typename Scalar>
struct LowRankProjection {
    Matrix<Scalar> a;            // V J_r V^T
    Matrix<Scalar> basis;        // eigenvectors of Y^T Y, decreasing eigenvalue order
    Vector<Scalar> eigenvalues;  // decreasing
    Index rank = 0;

    LowRankA<Scalar> structure() const { return LowRankA<Scalar>{rank, basis}; }
};

/// Rank-r orthogonal projection onto the leading eigenvectors of Y^T Y.
template <typename DerivedY>
LowRankProjection<typename DerivedY::Scalar> build_lowrank_A(const Eigen::MatrixBase<DerivedY>& y, Index rank) {
    using Scalar = typename DerivedY::Scalar;
    const Index d = y.cols();
    if (rank < 0 || rank > d) {
        throw InvalidArgument("build_lowrank_A: rank " + std::to_string(rank) + " outside [0, " + std::to_string(d) + "]");
    }
    const Matrix<Scalar> gram = y.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("build_lowrank_A: eigendecomposition failed");
    LowRankProjection<Scalar> out;
    out.rank = rank;
    out.basis = es.eigenvectors().rowwise().reverse();
    out.eigenvalues = es.eigenvalues().reverse();
    KernelSpec<Scalar> spec;
    spec.a = out.structure();
    out.a = materialize_A(spec, d);
    return out;
}

}  // namespace vitl
