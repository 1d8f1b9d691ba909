#pragma once

// Kronecker-free directional derivative of the TTLS solution map
// [A b] -> x_k. Every estimator in sce.hpp and the structured condition
// numbers in structure.hpp go through DerivativeKernel.

#include "ttls/core.hpp"

#include <Eigen/SparseCore>

#include <atomic>
#include <cstddef>

namespace ttls {

/// The (n+1-k) x k matrix of reciprocal gaps. Column i holds
/// 1/(sigma_i^2 - sigma_j^2) for j = k+1..p, then 1/sigma_i^2 for the rows
/// that only exist when m < n+1.
struct GapReciprocalMatrix {
    enum class Branch { MLessThanNPlus1, MAtLeastNPlus1 };

    Matrix data;
    Branch branch = Branch::MAtLeastNPlus1;
};

inline GapReciprocalMatrix build_gap_reciprocal(const TruncationContext& ctx)
{
    const Index k = ctx.k(), n = ctx.n(), p = ctx.p();
    const Vector& s = ctx.svd().sigma;
    GapReciprocalMatrix out;
    out.branch = ctx.m() < n + 1 ? GapReciprocalMatrix::Branch::MLessThanNPlus1
                                 : GapReciprocalMatrix::Branch::MAtLeastNPlus1;
    out.data.resize(n + 1 - k, k);
    for (Index i = 0; i < k; ++i) {
        const double si2 = s(i) * s(i);
        for (Index j = 0; j < n + 1 - k; ++j) {
            const Index idx = k + j;
            out.data(j, i) = idx < p ? 1.0 / (si2 - s(idx) * s(idx)) : 1.0 / si2;
        }
    }
    return out;
}

/// A perturbation direction Delta H = [dA db].
struct Direction {
    Matrix dA;
    Vector db;

    [[nodiscard]] Matrix augmented() const { return augment(dA, db); }
};

/// Evaluates psi_k'([A b]; Delta H) for many directions against one
/// truncation context. Per call the cost is O(k (m n + m (p-k))) and no
/// Kronecker product is ever formed.
///
/// The kernel counts its evaluations so callers can verify how many
/// derivative applications an estimator performed.
class DerivativeKernel {
public:
    DerivativeKernel(TruncationContext ctx, Vector xk)
        : ctx_(std::move(ctx)), xk_(std::move(xk)), gaps_(build_gap_reciprocal(ctx_))
    {
        detail::require(xk_.size() == ctx_.n(), Errc::DimensionMismatch,
                        "DerivativeKernel: x_k has the wrong length");
        inv_nu2_ = 1.0 / (ctx_.v22norm() * ctx_.v22norm());
    }

    explicit DerivativeKernel(const TruncationContext& ctx)
        : DerivativeKernel(ctx, ttls_solution_vector(ctx))
    {
    }

    DerivativeKernel(const DerivativeKernel&) = delete;
    DerivativeKernel& operator=(const DerivativeKernel&) = delete;

    [[nodiscard]] const TruncationContext& context() const noexcept { return ctx_; }
    [[nodiscard]] const Vector& xk() const noexcept { return xk_; }
    [[nodiscard]] const GapReciprocalMatrix& gaps() const noexcept { return gaps_; }

    [[nodiscard]] std::size_t evaluations() const noexcept { return evaluations_.load(); }
    void reset_evaluations() const noexcept { evaluations_.store(0); }

    /// Delta H is any m x (n+1) Eigen matrix, dense or sparse.
    template <typename MatrixType>
    Vector operator()(const MatrixType& dH) const
    {
        const Index m = ctx_.m(), n = ctx_.n(), k = ctx_.k(), p = ctx_.p();
        detail::require(dH.rows() == m && dH.cols() == n + 1, Errc::DimensionMismatch,
                        "directional derivative: Delta H must be " + std::to_string(m) + "x"
                            + std::to_string(n + 1));
        ++evaluations_;

        const Index r = n + 1 - k; // columns of V2
        const Index q = p - k;     // rows of Sigma2^T that are not zero padding
        const auto U1 = ctx_.U1();
        const auto Uq = ctx_.svd().U.middleCols(k, q);
        const auto V1 = ctx_.V1();
        const auto V2 = ctx_.V2();

        // Y1 = U1^T dH V2 (k x r), Y2 = Uq^T dH V1 (q x k); pick the cheaper association.
        Matrix Y1, Y2;
        if (r <= k) {
            Y1 = U1.transpose() * Matrix(dH * V2);
        } else {
            Y1 = Matrix(U1.transpose() * dH) * V2;
        }
        if (q <= k) {
            Y2 = Matrix(Uq.transpose() * dH) * V1;
        } else {
            Y2 = Uq.transpose() * Matrix(dH * V1);
        }

        // Z1 = (Sigma2^T U2^T dH V1) .* D, Z2 = (Sigma1 U1^T dH V2) .* D^T
        Matrix Z1 = Matrix::Zero(r, k);
        Z1.topRows(q) = (ctx_.sigma2().asDiagonal() * Y2).cwiseProduct(gaps_.data.topRows(q));
        const Matrix Z2 = (ctx_.sigma1().asDiagonal() * Y1).cwiseProduct(gaps_.data.transpose());

        const auto V11 = ctx_.V11();
        const auto V12 = ctx_.V12();
        const Vector v21 = ctx_.V21().transpose();
        const Vector v22 = ctx_.V22().transpose();

        const Matrix Z1t_plus_Z2 = Z1.transpose() + Z2;
        const double c1 = v21.dot(Z1.transpose() * v22);
        const double c2 = v21.dot(Z2 * v22);
        const double c3 = v22.dot(Z1 * v21);
        const double c4 = v22.dot(Z2.transpose() * v21);

        Vector g = V11 * (Z1t_plus_Z2 * v22) + V12 * (Z1t_plus_Z2.transpose() * v21)
                   + xk_ * (c1 + c2 + c3 + c4);
        return g * inv_nu2_;
    }

    Vector operator()(const Direction& dir) const
    {
        detail::require(dir.dA.rows() == dir.db.size(), Errc::DimensionMismatch,
                        "directional derivative: dA and db disagree on the row count");
        return (*this)(dir.augmented());
    }

private:
    TruncationContext ctx_;
    Vector xk_;
    GapReciprocalMatrix gaps_;
    double inv_nu2_ = 0.0;
    mutable std::atomic<std::size_t> evaluations_{0};
};

/// One-off evaluation; prefer DerivativeKernel when sweeping many directions.
inline Vector directional_derivative(const TruncationContext& ctx, const Vector& xk, const Direction& dir)
{
    const DerivativeKernel kernel(ctx, xk);
    return kernel(dir);
}

inline Vector directional_derivative(const TruncationContext& ctx, const Vector& xk, const Matrix& dH)
{
    const DerivativeKernel kernel(ctx, xk);
    return kernel(dH);
}

} // namespace ttls
