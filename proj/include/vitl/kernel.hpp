#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "vitl/errors.hpp"

namespace vitl {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Scalar kernels

/// exp(-gamma * ||u - v||^2). Bitwise symmetric in (u, v).
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar gaussian_kernel(const Eigen::MatrixBase<DerivedU>& u,
                                          const Eigen::MatrixBase<DerivedV>& v,
                                          typename DerivedU::Scalar gamma) {
    using Scalar = typename DerivedU::Scalar;
    if (u.size() != v.size()) {
        throw DimensionError("gaussian_kernel: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                             std::to_string(v.size()) + ")");
    }
    if (!(gamma > Scalar(0))) throw InvalidArgument("gaussian_kernel: gamma must be positive");
    Scalar sq = 0;
    for (Index k = 0; k < u.size(); ++k) {
        const Scalar diff = u.derived().coeff(k) - v.derived().coeff(k);
        sq += diff * diff;
    }
    return std::exp(-gamma * sq);
}

/// Cross Gram matrix between the rows of `a` and the rows of `b`.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> gaussian_gram(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b,
                                                typename DerivedA::Scalar gamma) {
    using Scalar = typename DerivedA::Scalar;
    if (a.cols() != b.cols()) throw DimensionError("gaussian_gram: row dimension mismatch");
    if (!(gamma > Scalar(0))) throw InvalidArgument("gaussian_gram: gamma must be positive");
    Matrix<Scalar> out(a.rows(), b.rows());
    for (Index j = 0; j < b.rows(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            out(i, j) = gaussian_kernel(a.row(i), b.row(j), gamma);
        }
    }
    return out;
}

/// Symmetric Gram matrix of the rows of `a`; the lower triangle is mirrored so
/// that K == K^T holds exactly and the diagonal is exactly 1.
template <typename Derived>
Matrix<typename Derived::Scalar> gaussian_gram(const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar gamma) {
    using Scalar = typename Derived::Scalar;
    if (!(gamma > Scalar(0))) throw InvalidArgument("gaussian_gram: gamma must be positive");
    const Index n = a.rows();
    Matrix<Scalar> out(n, n);
    for (Index j = 0; j < n; ++j) {
        out(j, j) = Scalar(1);
        for (Index i = j + 1; i < n; ++i) {
            out(i, j) = gaussian_kernel(a.row(i), a.row(j), gamma);
            out(j, i) = out(i, j);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output-structure matrix A of the decomposable kernel k_Theta(., .) * A

struct IdentityA {};

template <typename Scalar>
struct LowRankA {
    Index rank = 0;
    Matrix<Scalar> basis;  // d x k, orthonormal columns, k >= rank; leading columns span the kept subspace
};

template <typename Scalar>
struct ExplicitA {
    Matrix<Scalar> matrix;
};

template <typename Scalar>
using AStructure = std::variant<IdentityA, LowRankA<Scalar>, ExplicitA<Scalar>>;

namespace detail {

template <typename Scalar>
Scalar spectral_norm_symmetric(const Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>& es) {
    const auto& ev = es.eigenvalues();
    if (ev.size() == 0) return Scalar(0);
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace detail

template <typename Scalar>
struct KernelSpec {
    Scalar gamma_x = Scalar(1);
    Scalar gamma_theta = Scalar(1);
    AStructure<Scalar> a = IdentityA{};

    bool is_identity() const { return std::holds_alternative<IdentityA>(a); }

    /// Throws InvalidArgument when a field breaks its invariant. `d` is the
    /// landmark dimension, or -1 to skip the dimension checks.
    void validate(Index d = -1) const {
        if (!(gamma_x > Scalar(0))) throw InvalidArgument("KernelSpec: gamma_x must be positive");
        if (!(gamma_theta > Scalar(0))) throw InvalidArgument("KernelSpec: gamma_theta must be positive");
        if (const auto* low = std::get_if<LowRankA<Scalar>>(&a)) {
            if (low->rank < 0) throw InvalidArgument("KernelSpec: negative rank");
            if (low->rank > low->basis.rows() || low->rank > low->basis.cols()) {
                throw InvalidArgument("KernelSpec: rank " + std::to_string(low->rank) + " exceeds dimension " +
                                      std::to_string(low->basis.rows()));
            }
            if (d >= 0 && low->basis.rows() != d) throw DimensionError("KernelSpec: low-rank basis has wrong row count");
            const Matrix<Scalar> gram = low->basis.transpose() * low->basis;
            const Matrix<Scalar> eye = Matrix<Scalar>::Identity(gram.rows(), gram.cols());
            if ((gram - eye).cwiseAbs().maxCoeff() > Scalar(1e-10)) {
                throw InvalidArgument("KernelSpec: low-rank basis columns are not orthonormal");
            }
        } else if (const auto* ex = std::get_if<ExplicitA<Scalar>>(&a)) {
            const auto& m = ex->matrix;
            if (m.rows() != m.cols()) throw InvalidArgument("KernelSpec: explicit A is not square");
            if (d >= 0 && m.rows() != d) throw DimensionError("KernelSpec: explicit A has wrong dimension");
            if (m.size() > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12)) {
                throw InvalidArgument("KernelSpec: explicit A is not symmetric");
            }
            Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(m, Eigen::EigenvaluesOnly);
            if (m.size() > 0 && es.eigenvalues()(0) < -Scalar(1e-10) * detail::spectral_norm_symmetric(es)) {
                throw InvalidArgument("KernelSpec: explicit A is not positive semidefinite");
            }
        }
    }
};

/// Dense d x d matrix for the spec's A: I_d, V J_r V^T, or the stored matrix.
template <typename Scalar>
Matrix<Scalar> materialize_A(const KernelSpec<Scalar>& spec, Index d) {
    if (d < 1) throw InvalidArgument("materialize_A: d must be >= 1");
    if (spec.is_identity()) return Matrix<Scalar>::Identity(d, d);
    if (const auto* low = std::get_if<LowRankA<Scalar>>(&spec.a)) {
        if (low->rank > d) {
            throw InvalidArgument("materialize_A: rank " + std::to_string(low->rank) + " > d = " + std::to_string(d));
        }
        if (low->basis.rows() != d) throw DimensionError("materialize_A: basis has wrong row count");
        const auto kept = low->basis.leftCols(low->rank);
        Matrix<Scalar> a = kept * kept.transpose();
        // symmetrize against round-off so downstream symmetry checks are exact
        Matrix<Scalar> sym = Scalar(0.5) * (a + a.transpose());
        return sym;
    }
    const auto& ex = std::get<ExplicitA<Scalar>>(spec.a);
    if (ex.matrix.rows() != d || ex.matrix.cols() != d) throw DimensionError("materialize_A: explicit A has wrong size");
    return ex.matrix;
}

// ---------------------------------------------------------------------------
// Gram matrices over (input, emotion) anchor pairs

enum class GramStructure { Dense, Kronecker };

/// Gram matrix over tm anchor pairs. Row/column index m*i + j refers to
/// identity i and emotion j (identity-major, emotion-minor).
template <typename Scalar>
class GramMatrix {
public:
    static GramMatrix dense(Matrix<Scalar> entries) {
        if (entries.rows() != entries.cols()) throw InvalidArgument("GramMatrix: dense entries must be square");
        GramMatrix g;
        g.structure_ = GramStructure::Dense;
        g.dense_ = std::move(entries);
        return g;
    }

    static GramMatrix kronecker(Matrix<Scalar> kx, Matrix<Scalar> ktheta) {
        if (kx.rows() != kx.cols() || ktheta.rows() != ktheta.cols()) {
            throw InvalidArgument("GramMatrix: Kronecker factors must be square");
        }
        GramMatrix g;
        g.structure_ = GramStructure::Kronecker;
        g.kx_ = std::move(kx);
        g.ktheta_ = std::move(ktheta);
        return g;
    }

    GramStructure structure() const { return structure_; }
    bool is_kronecker() const { return structure_ == GramStructure::Kronecker; }

    Index size() const { return is_kronecker() ? kx_.rows() * ktheta_.rows() : dense_.rows(); }

    const Matrix<Scalar>& entries() const {
        if (is_kronecker()) throw InvalidArgument("GramMatrix: entries() on a Kronecker-structured Gram; use to_dense()");
        return dense_;
    }
    const Matrix<Scalar>& kx() const { return kx_; }
    const Matrix<Scalar>& ktheta() const { return ktheta_; }

    Matrix<Scalar> to_dense() const {
        if (!is_kronecker()) return dense_;
        return Eigen::kroneckerProduct(kx_, ktheta_).eval();
    }

private:
    GramStructure structure_ = GramStructure::Dense;
    Matrix<Scalar> dense_;
    Matrix<Scalar> kx_;
    Matrix<Scalar> ktheta_;
};

/// Full (tm) x (tm) Gram matrix. `inputs` is t x d (one anchor input per row),
/// `thetas` is (tm) x p with row m*i + j holding theta_{i,j}.
template <typename DerivedX, typename DerivedT>
GramMatrix<typename DerivedX::Scalar> build_gram_dense(const Eigen::MatrixBase<DerivedX>& inputs,
                                                       const Eigen::MatrixBase<DerivedT>& thetas,
                                                       const KernelSpec<typename DerivedX::Scalar>& spec) {
    using Scalar = typename DerivedX::Scalar;
    const Index t = inputs.rows();
    if (t < 1 || thetas.rows() < 1) throw InvalidArgument("build_gram_dense: empty dataset");
    if (thetas.rows() % t != 0) {
        throw InvalidArgument("build_gram_dense: emotion rows (" + std::to_string(thetas.rows()) +
                              ") not a multiple of t = " + std::to_string(t));
    }
    const Index m = thetas.rows() / t;
    const Matrix<Scalar> kx = gaussian_gram(inputs, spec.gamma_x);
    const Matrix<Scalar> kt = gaussian_gram(thetas, spec.gamma_theta);
    Matrix<Scalar> k(t * m, t * m);
    for (Index i2 = 0; i2 < t; ++i2) {
        for (Index i1 = 0; i1 < t; ++i1) {
            k.block(m * i1, m * i2, m, m) = kx(i1, i2) * kt.block(m * i1, m * i2, m, m);
        }
    }
    return GramMatrix<Scalar>::dense(std::move(k));
}

/// Gram matrix restricted to a subset of anchor pairs: `thetas` rows are the
/// observed pairs and `owner(r)` gives the input row of pair r.
template <typename DerivedX, typename DerivedT>
Matrix<typename DerivedX::Scalar> build_gram_pairs(const Eigen::MatrixBase<DerivedX>& inputs,
                                                   const Eigen::MatrixBase<DerivedT>& thetas,
                                                   const Eigen::Ref<const Eigen::Matrix<Index, Eigen::Dynamic, 1>>& owner,
                                                   const KernelSpec<typename DerivedX::Scalar>& spec) {
    using Scalar = typename DerivedX::Scalar;
    if (owner.size() != thetas.rows()) throw DimensionError("build_gram_pairs: owner size mismatch");
    const Matrix<Scalar> kx = gaussian_gram(inputs, spec.gamma_x);
    const Matrix<Scalar> kt = gaussian_gram(thetas, spec.gamma_theta);
    const Index n = thetas.rows();
    Matrix<Scalar> k(n, n);
    for (Index b = 0; b < n; ++b) {
        for (Index a = 0; a < n; ++a) k(a, b) = kx(owner(a), owner(b)) * kt(a, b);
    }
    return k;
}

/// Kronecker-factored Gram for a shared emotion grid (m x p, one row per emotion).
template <typename DerivedX, typename DerivedT>
GramMatrix<typename DerivedX::Scalar> build_gram_kron(const Eigen::MatrixBase<DerivedX>& inputs,
                                                      const Eigen::MatrixBase<DerivedT>& shared_grid,
                                                      const KernelSpec<typename DerivedX::Scalar>& spec) {
    using Scalar = typename DerivedX::Scalar;
    if (inputs.rows() < 1 || shared_grid.rows() < 1) throw InvalidArgument("build_gram_kron: empty dataset");
    return GramMatrix<Scalar>::kronecker(gaussian_gram(inputs, spec.gamma_x), gaussian_gram(shared_grid, spec.gamma_theta));
}

}  // namespace vitl
