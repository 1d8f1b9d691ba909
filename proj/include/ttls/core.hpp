#pragma once

// SVD of the augmented matrix [A b], truncation bookkeeping, the truncated
// TLS solve, and the small vec/Kronecker/Gram-Schmidt helpers shared by the
// rest of the library.

#include "ttls/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace ttls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numerical thresholds standing in for the exact-arithmetic conditions
/// sigma_k > sigma_{k+1} and V22 != 0.
struct Tolerances {
    double gap = 1e-12;     ///< relative to sigma_1
    double generic = 1e-12; ///< absolute, on ||V22||_2
};

// ---------------------------------------------------------------------------
// vec / unvec / kron / commutation

template <typename Derived>
Vector vec(const Eigen::MatrixBase<Derived>& B)
{
    Matrix tmp = B; // column-major, so the storage order is the stacking order
    return Eigen::Map<const Vector>(tmp.data(), tmp.size());
}

inline Matrix unvec(const Vector& v, Index rows, Index cols)
{
    detail::require(rows >= 0 && cols >= 0 && v.size() == rows * cols, Errc::DimensionMismatch,
                    "unvec: vector of length " + std::to_string(v.size()) + " cannot be shaped "
                        + std::to_string(rows) + "x" + std::to_string(cols));
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

template <typename DerivedX, typename DerivedY>
Matrix kron(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y)
{
    const Index xr = X.rows(), xc = X.cols(), yr = Y.rows(), yc = Y.cols();
    Matrix out(xr * yr, xc * yc);
    for (Index j = 0; j < xc; ++j) {
        for (Index i = 0; i < xr; ++i) {
            out.block(i * yr, j * yc, yr, yc) = X(i, j) * Y;
        }
    }
    return out;
}

/// Permutation Pi_{m,n} with Pi * vec(B) = vec(B^T) for every m-by-n B.
inline Matrix commutation(Index m, Index n)
{
    detail::require(m >= 0 && n >= 0, Errc::DimensionMismatch, "commutation: negative size");
    Matrix P = Matrix::Zero(m * n, m * n);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            // B(i,j) sits at i + j*m in vec(B) and at j + i*n in vec(B^T)
            P(j + i * n, i + j * m) = 1.0;
        }
    }
    return P;
}

/// Modified Gram-Schmidt on the columns of `columns`.
/// Throws RankDeficientSample when a column collapses after projection.
inline Matrix mgs_orthonormalize(const Matrix& columns)
{
    detail::require(columns.cols() <= columns.rows(), Errc::RankDeficientSample,
                    "mgs: more columns than the ambient dimension");
    Matrix Q = columns;
    for (Index j = 0; j < Q.cols(); ++j) {
        const double original = Q.col(j).norm();
        for (Index i = 0; i < j; ++i) {
            Q.col(j) -= Q.col(i).dot(Q.col(j)) * Q.col(i);
        }
        const double norm = Q.col(j).norm();
        if (!(norm >= 1e-12 * std::max(original, 1e-300)) || norm == 0.0) {
            throw Error(Errc::RankDeficientSample,
                        "mgs: column " + std::to_string(j) + " is numerically dependent");
        }
        Q.col(j) /= norm;
    }
    return Q;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
    return m.allFinite();
}

// ---------------------------------------------------------------------------
// Augmented SVD

/// Full SVD [A b] = U diag(sigma) V^T with square U (m x m) and V ((n+1) x (n+1)).
struct AugmentedSvd {
    Index m = 0;
    Index n = 0;
    Matrix U;
    Vector sigma; ///< length p = min(m, n+1), nonincreasing
    Matrix V;

    [[nodiscard]] Index p() const noexcept { return std::min(m, n + 1); }

    /// ||[A b]||_F recovered from the singular values.
    [[nodiscard]] double frobenius() const { return sigma.norm(); }

    [[nodiscard]] Matrix reconstruct() const
    {
        Matrix S = Matrix::Zero(m, n + 1);
        S.diagonal().head(p()) = sigma;
        return U * S * V.transpose();
    }

    /// Max deviation of U^T U and V^T V from the identity.
    [[nodiscard]] double orthogonality_error() const
    {
        const double eu = (U.transpose() * U - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
        const double ev = (V.transpose() * V - Matrix::Identity(n + 1, n + 1)).cwiseAbs().maxCoeff();
        return std::max(eu, ev);
    }
};

inline Matrix augment(const Matrix& A, const Vector& b)
{
    detail::require(A.rows() == b.size(), Errc::DimensionMismatch,
                    "augment: A has " + std::to_string(A.rows()) + " rows but b has "
                        + std::to_string(b.size()) + " entries");
    Matrix H(A.rows(), A.cols() + 1);
    H << A, b;
    return H;
}

namespace detail {

// Jacobi is the more accurate backend and cheap at this size; divide and
// conquer takes over for the larger experiments.
inline constexpr Index kJacobiMaxEntries = 64 * 64;

template <typename Svd>
AugmentedSvd unpack_svd(const Svd& svd, Index m, Index n)
{
    if (svd.info() != Eigen::Success) {
        throw Error(Errc::ComputationFailed, "SVD of [A b] did not converge");
    }
    AugmentedSvd out;
    out.m = m;
    out.n = n;
    out.U = svd.matrixU();
    out.V = svd.matrixV();
    out.sigma = svd.singularValues();
    if (!out.sigma.allFinite() || !out.U.allFinite() || !out.V.allFinite()) {
        throw Error(Errc::ComputationFailed, "SVD of [A b] produced non-finite factors");
    }
    return out;
}

} // namespace detail

inline AugmentedSvd augmented_svd(const Matrix& A, const Vector& b)
{
    detail::require(all_finite(A) && all_finite(b), Errc::NonFinite, "augmented_svd: non-finite input");
    detail::require(A.rows() >= 1 && A.cols() >= 1, Errc::DimensionMismatch, "augmented_svd: empty A");
    const Matrix H = augment(A, b);
    const Index m = A.rows(), n = A.cols();

    AugmentedSvd out;
    if (H.size() <= detail::kJacobiMaxEntries) {
        Eigen::JacobiSVD<Matrix> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        out = detail::unpack_svd(svd, m, n);
    } else {
        Eigen::BDCSVD<Matrix> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        out = detail::unpack_svd(svd, m, n);
    }
#ifndef NDEBUG
    const double scale = std::max(H.norm(), 1.0);
    if ((out.reconstruct() - H).norm() > 1e-12 * scale * std::max<double>(m, n + 1)) {
        throw Error(Errc::ComputationFailed, "SVD reconstruction check failed");
    }
#endif
    return out;
}

// ---------------------------------------------------------------------------
// Truncation

/// A validated truncation level with views onto the V/U/Sigma partition:
///
///     V = [V11 V12]   V11: n x k,  V12: n x (n+1-k)
///         [V21 V22]   V21: 1 x k,  V22: 1 x (n+1-k)
///
/// Sigma2 is kept as the vector sigma_{k+1..p}; its rectangular
/// (m-k) x (n+1-k) shape is implied.
class TruncationContext {
public:
    TruncationContext(std::shared_ptr<const AugmentedSvd> svd, Index k, double v22norm)
        : svd_(std::move(svd)), k_(k), v22norm_(v22norm)
    {
    }

    [[nodiscard]] const AugmentedSvd& svd() const noexcept { return *svd_; }
    [[nodiscard]] const std::shared_ptr<const AugmentedSvd>& svd_ptr() const noexcept { return svd_; }
    [[nodiscard]] Index k() const noexcept { return k_; }
    [[nodiscard]] Index m() const noexcept { return svd_->m; }
    [[nodiscard]] Index n() const noexcept { return svd_->n; }
    [[nodiscard]] Index p() const noexcept { return svd_->p(); }

    [[nodiscard]] double v22norm() const noexcept { return v22norm_; }
    [[nodiscard]] double gap() const { return svd_->sigma(k_ - 1) - svd_->sigma(k_); }

    [[nodiscard]] auto V11() const { return svd_->V.topLeftCorner(n(), k_); }
    [[nodiscard]] auto V12() const { return svd_->V.topRightCorner(n(), n() + 1 - k_); }
    [[nodiscard]] auto V21() const { return svd_->V.bottomLeftCorner(1, k_); }
    [[nodiscard]] auto V22() const { return svd_->V.bottomRightCorner(1, n() + 1 - k_); }
    [[nodiscard]] auto V1() const { return svd_->V.leftCols(k_); }
    [[nodiscard]] auto V2() const { return svd_->V.rightCols(n() + 1 - k_); }
    [[nodiscard]] auto U1() const { return svd_->U.leftCols(k_); }
    [[nodiscard]] auto U2() const { return svd_->U.rightCols(m() - k_); }
    [[nodiscard]] auto sigma1() const { return svd_->sigma.head(k_); }
    [[nodiscard]] auto sigma2() const { return svd_->sigma.segment(k_, p() - k_); }

private:
    std::shared_ptr<const AugmentedSvd> svd_;
    Index k_;
    double v22norm_;
};

inline TruncationContext truncate(std::shared_ptr<const AugmentedSvd> svd, Index k,
                                  const Tolerances& tol = {})
{
    detail::require(svd != nullptr, Errc::InvalidArgument, "truncate: null SVD");
    const Index p = svd->p();
    if (k < 1 || k >= p) {
        throw Error(Errc::BadLevel, "truncation level " + std::to_string(k) + " outside [1, "
                                        + std::to_string(p - 1) + "]");
    }
    const double gap = svd->sigma(k - 1) - svd->sigma(k);
    if (!(gap > tol.gap * svd->sigma(0))) {
        throw Error(Errc::GapViolation, "sigma_k - sigma_{k+1} = " + std::to_string(gap)
                                            + " is not a genuine gap at k = " + std::to_string(k));
    }
    const Index n = svd->n;
    const double v22norm = svd->V.bottomRightCorner(1, n + 1 - k).norm();
    if (!(v22norm > tol.generic)) {
        throw Error(Errc::NotGeneric, "||V22|| = " + std::to_string(v22norm) + " at k = "
                                          + std::to_string(k));
    }
    return TruncationContext(std::move(svd), k, v22norm);
}

inline TruncationContext truncate(const AugmentedSvd& svd, Index k, const Tolerances& tol = {})
{
    return truncate(std::make_shared<const AugmentedSvd>(svd), k, tol);
}

// ---------------------------------------------------------------------------
// Solve

struct TtlsSolution {
    Vector xk;
    double residual_norm = 0.0; ///< ||[A b] [xk; -1]||_2
    Index k = 0;
};

/// Minimum-norm TTLS solution x_k = -V12 V22^T / ||V22||^2.
inline Vector ttls_solution_vector(const TruncationContext& ctx)
{
    const double nu2 = ctx.v22norm() * ctx.v22norm();
    return -(ctx.V12() * ctx.V22().transpose()) / nu2;
}

inline TtlsSolution solve_ttls(const TruncationContext& ctx)
{
    TtlsSolution out;
    out.k = ctx.k();
    out.xk = ttls_solution_vector(ctx);
    // [A b] = U S V^T, so the residual is ||S V^T [x; -1]|| without forming [A b].
    Vector z(ctx.n() + 1);
    z << out.xk, -1.0;
    const Vector w = ctx.svd().V.transpose() * z;
    out.residual_norm = w.head(ctx.p()).cwiseProduct(ctx.svd().sigma).norm();
    return out;
}

/// Convenience: SVD, truncate and solve in one call.
inline TtlsSolution solve_ttls(const Matrix& A, const Vector& b, Index k, const Tolerances& tol = {})
{
    auto svd = std::make_shared<const AugmentedSvd>(augmented_svd(A, b));
    return solve_ttls(truncate(svd, k, tol));
}

} // namespace ttls
