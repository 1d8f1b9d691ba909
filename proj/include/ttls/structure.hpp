#pragma once

// Linear structures A = sum_i a_i S_i (Toeplitz and custom bases) and the
// exact structured condition numbers kappa_s, m_s, c_s.

#include "ttls/condition.hpp"
#include "ttls/derivative.hpp"

#include <Eigen/SparseCore>
#include <Eigen/QR>

#include <set>
#include <utility>
#include <vector>

namespace ttls {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Basis S_1..S_t of an m x n structure, each stored as triplets.
struct LinearStructure {
    Index m = 0;
    Index n = 0;
    std::vector<std::vector<Triplet>> basis;
    bool normalized = false;       ///< every vec(S_i) has unit 2-norm
    bool disjoint_support = false; ///< supports pairwise disjoint, so Phi has orthogonal columns

    [[nodiscard]] Index t() const noexcept { return static_cast<Index>(basis.size()); }
};

namespace detail {

inline bool supports_disjoint(const LinearStructure& s)
{
    std::set<std::pair<Index, Index>> seen;
    for (const auto& Si : s.basis) {
        std::set<std::pair<Index, Index>> own;
        for (const auto& e : Si) {
            if (e.value() != 0.0) {
                own.emplace(e.row(), e.col());
            }
        }
        for (const auto& ij : own) {
            if (!seen.insert(ij).second) {
                return false;
            }
        }
    }
    return true;
}

inline double basis_norm(const std::vector<Triplet>& Si, Index m, Index n)
{
    // duplicates are summed, as in Eigen's setFromTriplets
    SparseMatrix S(m, n);
    S.setFromTriplets(Si.begin(), Si.end());
    return S.norm();
}

} // namespace detail

/// Validates a custom basis: indices in range, every S_i nonzero, and
/// vec(S_1)..vec(S_t) linearly independent. Sets the two flags.
inline LinearStructure make_structure(Index m, Index n, std::vector<std::vector<Triplet>> basis)
{
    detail::require(m >= 1 && n >= 1, Errc::DimensionMismatch, "structure: empty shape");
    LinearStructure s;
    s.m = m;
    s.n = n;
    s.basis = std::move(basis);
    detail::require(s.t() >= 1 && s.t() <= m * n, Errc::InvalidArgument, "structure: need 1 <= t <= mn");
    bool unit = true;
    for (const auto& Si : s.basis) {
        for (const auto& e : Si) {
            detail::require(e.row() >= 0 && e.row() < m && e.col() >= 0 && e.col() < n, Errc::DimensionMismatch,
                            "structure: basis index out of range");
            detail::require(std::isfinite(e.value()), Errc::NonFinite, "structure: non-finite basis value");
        }
        const double nrm = detail::basis_norm(Si, m, n);
        detail::require(nrm > 0.0, Errc::InvalidArgument, "structure: zero basis matrix");
        unit = unit && std::abs(nrm - 1.0) <= 1e-14;
    }
    s.disjoint_support = detail::supports_disjoint(s);
    s.normalized = unit;
    if (!s.disjoint_support) {
        Matrix Phi = Matrix::Zero(m * n, s.t());
        for (Index i = 0; i < s.t(); ++i) {
            for (const auto& e : s.basis[i]) {
                Phi(e.row() + e.col() * m, i) += e.value();
            }
        }
        Eigen::ColPivHouseholderQR<Matrix> qr(Phi);
        qr.setThreshold(1e-12);
        detail::require(qr.rank() == s.t(), Errc::InvalidArgument, "structure: basis is linearly dependent");
    }
    return s;
}

/// Toeplitz basis: t = m+n-1 diagonal indicators, ordered as the first
/// column (main diagonal downwards) followed by first-row entries 2..n.
inline LinearStructure toeplitz_structure(Index m, Index n)
{
    detail::require(m >= 1 && n >= 1, Errc::DimensionMismatch, "toeplitz_structure: empty shape");
    LinearStructure s;
    s.m = m;
    s.n = n;
    s.basis.reserve(static_cast<std::size_t>(m + n - 1));
    for (Index d = 0; d < m; ++d) { // A(i, j) with i - j = d
        std::vector<Triplet> Si;
        for (Index j = 0; j < n && j + d < m; ++j) {
            Si.emplace_back(j + d, j, 1.0);
        }
        s.basis.push_back(std::move(Si));
    }
    for (Index d = 1; d < n; ++d) { // j - i = d
        std::vector<Triplet> Si;
        for (Index i = 0; i < m && i + d < n; ++i) {
            Si.emplace_back(i, i + d, 1.0);
        }
        s.basis.push_back(std::move(Si));
    }
    s.disjoint_support = true;
    s.normalized = m == 1 && n == 1;
    return s;
}

/// Unit matrices E_ij in vec order, i.e. Phi = I_{mn}.
inline LinearStructure full_structure(Index m, Index n)
{
    LinearStructure s;
    s.m = m;
    s.n = n;
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
            s.basis.push_back({Triplet(i, j, 1.0)});
        }
    }
    s.normalized = true;
    s.disjoint_support = true;
    return s;
}

/// Same span with every vec(S_i) scaled to unit norm.
inline LinearStructure normalized(const LinearStructure& s)
{
    LinearStructure out = s;
    for (auto& Si : out.basis) {
        const double nrm = detail::basis_norm(Si, s.m, s.n);
        for (auto& e : Si) {
            e = Triplet(e.row(), e.col(), e.value() / nrm);
        }
    }
    out.normalized = true;
    return out;
}

/// Coefficients with respect to the normalized basis that reproduce the
/// same matrix as `a` does for the raw basis.
inline Vector normalized_coefficients(const LinearStructure& s, const Vector& a)
{
    detail::require(a.size() == s.t(), Errc::DimensionMismatch, "normalized_coefficients: length of a");
    Vector out(a.size());
    for (Index i = 0; i < s.t(); ++i) {
        out(i) = a(i) * detail::basis_norm(s.basis[i], s.m, s.n);
    }
    return out;
}

inline SparseMatrix sparse_materialize(const LinearStructure& s, const Vector& a)
{
    detail::require(a.size() == s.t(), Errc::DimensionMismatch,
                    "materialize: expected " + std::to_string(s.t()) + " coefficients, got "
                        + std::to_string(a.size()));
    std::vector<Triplet> all;
    for (Index i = 0; i < s.t(); ++i) {
        if (a(i) == 0.0) {
            continue;
        }
        for (const auto& e : s.basis[i]) {
            all.emplace_back(e.row(), e.col(), a(i) * e.value());
        }
    }
    SparseMatrix A(s.m, s.n);
    A.setFromTriplets(all.begin(), all.end());
    return A;
}

inline Matrix materialize(const LinearStructure& s, const Vector& a) { return Matrix(sparse_materialize(s, a)); }

inline Vector apply_phi(const LinearStructure& s, const Vector& da) { return vec(materialize(s, da)); }

/// Phi = [vec(S_1) ... vec(S_t)], mn x t.
inline SparseMatrix phi_matrix(const LinearStructure& s)
{
    std::vector<Triplet> all;
    for (Index i = 0; i < s.t(); ++i) {
        for (const auto& e : s.basis[i]) {
            all.emplace_back(e.row() + e.col() * s.m, i, e.value());
        }
    }
    SparseMatrix Phi(s.m * s.n, s.t());
    Phi.setFromTriplets(all.begin(), all.end());
    return Phi;
}

inline bool is_toeplitz(const Matrix& A, double tol = 0.0)
{
    for (Index j = 1; j < A.cols(); ++j) {
        for (Index i = 1; i < A.rows(); ++i) {
            if (std::abs(A(i, j) - A(i - 1, j - 1)) > tol) {
                return false;
            }
        }
    }
    return true;
}

/// Coefficients of a Toeplitz matrix in toeplitz_structure order.
inline Vector toeplitz_coefficients(const Matrix& A)
{
    detail::require(is_toeplitz(A), Errc::InvalidArgument, "toeplitz_coefficients: matrix is not Toeplitz");
    const Index m = A.rows(), n = A.cols();
    Vector a(m + n - 1);
    a.head(m) = A.col(0);
    if (n > 1) {
        a.tail(n - 1) = A.row(0).tail(n - 1).transpose();
    }
    return a;
}

/// Coefficients a with A = sum a_i S_i, rejected if A is not in the span.
inline Vector structure_coefficients(const LinearStructure& s, const Matrix& A)
{
    const SparseMatrix Phi = phi_matrix(s);
    const Vector vA = vec(A);
    Vector a;
    if (s.disjoint_support) {
        // orthogonal columns: a_i = <vec S_i, vec A> / ||vec S_i||^2
        a = (Phi.transpose() * vA).cwiseQuotient(Vector(Phi.transpose() * Phi * Vector::Ones(s.t())));
    } else {
        a = Matrix(Phi).colPivHouseholderQr().solve(vA);
    }
    const double res = (Phi * a - vA).norm();
    if (res > 1e-10 * std::max(1.0, vA.norm())) {
        throw Error(Errc::InvalidArgument, "A does not lie in the span of the structure basis");
    }
    return a;
}

// ---------------------------------------------------------------------------
// Structured condition numbers

struct StructuredCondReport {
    double kappa_s_abs = 0.0;
    double kappa_s_rel = 0.0;
    double mixed_s = 0.0;
    double compwise_s = 0.0;
    Vector abs_vector_s; ///< |M_k blkdiag(Phi, I_m)| [|a|; |b|]
};

/// M_k blkdiag(Phi, I_m), n x (t+m), one derivative evaluation per column.
inline Matrix structured_jacobian(const DerivativeKernel& kernel, const LinearStructure& s)
{
    const TruncationContext& ctx = kernel.context();
    detail::require(s.m == ctx.m() && s.n == ctx.n(), Errc::DimensionMismatch, "structure shape differs from A");
    const Index m = ctx.m(), n = ctx.n(), t = s.t();
    Matrix J(n, t + m);
    SparseMatrix dH(m, n + 1);
    for (Index i = 0; i < t; ++i) {
        dH.setFromTriplets(s.basis[i].begin(), s.basis[i].end());
        J.col(i) = kernel(dH);
    }
    for (Index j = 0; j < m; ++j) {
        const Triplet e(j, n, 1.0);
        dH.setFromTriplets(&e, &e + 1);
        J.col(t + j) = kernel(dH);
    }
    return J;
}

/// The same product from an assembled M_k (cross-check path).
inline Matrix structured_jacobian(const MkMatrix& mk, const LinearStructure& s)
{
    const Index mn = s.m * s.n;
    detail::require(mk.data.cols() == mn + s.m, Errc::DimensionMismatch, "structure shape differs from M_k");
    Matrix J(mk.data.rows(), s.t() + s.m);
    J.leftCols(s.t()) = mk.data.leftCols(mn) * phi_matrix(s);
    J.rightCols(s.m) = mk.data.rightCols(s.m);
    return J;
}

inline StructuredCondReport structured_cond(const Matrix& J, const Vector& a, const Vector& b, const Vector& xk)
{
    detail::require(J.cols() == a.size() + b.size(), Errc::DimensionMismatch, "structured_cond: t + m mismatch");
    detail::require_nonzero_solution(xk, "structured_cond");
    Vector ab(a.size() + b.size());
    ab << a, b;
    StructuredCondReport out;
    out.kappa_s_abs = detail::spectral_norm(J);
    out.kappa_s_rel = out.kappa_s_abs * ab.norm() / xk.norm();
    out.abs_vector_s = J.cwiseAbs() * ab.cwiseAbs();
    out.mixed_s = out.abs_vector_s.lpNorm<Eigen::Infinity>() / xk.lpNorm<Eigen::Infinity>();
    out.compwise_s = componentwise_inf_ratio(out.abs_vector_s, xk);
    return out;
}

inline StructuredCondReport structured_cond(const MkMatrix& mk, const LinearStructure& s, const Vector& a,
                                            const Vector& b, const Vector& xk)
{
    return structured_cond(structured_jacobian(mk, s), a, b, xk);
}

inline StructuredCondReport structured_cond(const DerivativeKernel& kernel, const LinearStructure& s,
                                            const Vector& a, const Vector& b)
{
    return structured_cond(structured_jacobian(kernel, s), a, b, kernel.xk());
}

} // namespace ttls
