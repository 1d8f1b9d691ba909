#pragma once

// Exact normwise, mixed and componentwise condition numbers of the TTLS
// solution, plus the untruncated (k = n) closed forms used as oracles.
//
// Two routes to the Frechet derivative matrix M_k (n x m(n+1)) live here:
//   * assemble_mk   - literal Kronecker assembly, O(m n^2 (n+1)) memory;
//   * JacobianFactor - a compact n x k(n+1-k) factor that streams M_k one
//                      n x m block at a time and gives ||M_k||_2 exactly.
// The factor is what the reports use; assemble_mk is kept for small
// problems and cross-checks.

#include "ttls/core.hpp"
#include "ttls/derivative.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ttls {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Entrywise num/den with 0/0 = 0 and x/0 = inf, reduced with the inf-norm.
inline double componentwise_inf_ratio(const Vector& num, const Vector& den)
{
    detail::require(num.size() == den.size(), Errc::DimensionMismatch, "componentwise ratio: size mismatch");
    double out = 0.0;
    for (Index i = 0; i < num.size(); ++i) {
        double r;
        if (den(i) != 0.0) {
            r = std::abs(num(i) / den(i));
        } else {
            r = num(i) == 0.0 ? 0.0 : kInfinity;
        }
        out = std::max(out, r);
    }
    return out;
}

namespace detail {

inline double spectral_norm(const Matrix& M)
{
    if (M.size() == 0) {
        return 0.0;
    }
    if (M.size() <= kJacobiMaxEntries) {
        return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
    }
    return Eigen::BDCSVD<Matrix>(M).singularValues()(0);
}

inline void require_nonzero_solution(const Vector& xk, const char* what)
{
    if (xk.size() == 0 || xk.cwiseAbs().maxCoeff() == 0.0) {
        throw Error(Errc::ZeroSolution, std::string(what) + ": x_k = 0");
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Assembled M_k

struct MkMatrix {
    enum class Provenance { Assembled, ClosedFormKEqN };

    Matrix data; ///< n x m(n+1)
    Index k = 0;
    Provenance provenance = Provenance::Assembled;
};

/// Cap on n * m(n+1) for the dense paths. The W factor of the literal
/// assembly is of the same order.
inline constexpr double kDefaultMkEntryCap = 4.0e7;

/// M_k = (1/||V22||^2) [I_n x_k] V K D^{-1} [I_k (x) Sigma2^T, Sigma1 (x) I_{n-k+1}] W
/// built literally from Kronecker products and commutation matrices.
inline MkMatrix assemble_mk(const TruncationContext& ctx, double entry_cap = kDefaultMkEntryCap)
{
    const Index m = ctx.m(), n = ctx.n(), k = ctx.k(), p = ctx.p();
    const Index r = n + 1 - k;
    const double rows_w = static_cast<double>(k * (m - k) + k * r);
    const double cost = std::max(static_cast<double>(n), rows_w) * static_cast<double>(m * (n + 1));
    if (cost > entry_cap) {
        throw Error(Errc::MemoryGuard, "assemble_mk: " + std::to_string(cost)
                                           + " dense entries exceed the configured cap");
    }
    const Vector xk = ttls_solution_vector(ctx);
    const Matrix& V = ctx.svd().V;

    Matrix Sigma2 = Matrix::Zero(m - k, r);
    for (Index j = 0; j < p - k; ++j) {
        Sigma2(j, j) = ctx.svd().sigma(k + j);
    }
    const Matrix Sigma1 = ctx.sigma1().asDiagonal();
    const Matrix Ik = Matrix::Identity(k, k);
    const Matrix Ir = Matrix::Identity(r, r);
    // commutation(a, b) maps vec(X) to vec(X^T) for X of size a x b
    const Matrix Pi_rk = commutation(r, k);

    Matrix K(n + 1, k * r);
    K << kron(Matrix(ctx.V22()), Ik) * Pi_rk, kron(Matrix(ctx.V21()), Ir);

    Vector d = (kron(Matrix(Sigma1 * Sigma1), Ir) - kron(Ik, Matrix(Sigma2.transpose() * Sigma2))).diagonal();
    const Vector d_inv = d.cwiseInverse();

    Matrix middle(k * r, k * (m - k) + k * r);
    middle << kron(Ik, Matrix(Sigma2.transpose())), kron(Sigma1, Ir);

    Matrix W(k * (m - k) + k * r, m * (n + 1));
    W << kron(Matrix(ctx.V1().transpose()), Matrix(ctx.U2().transpose())),
        commutation(k, r) * kron(Matrix(ctx.V2().transpose()), Matrix(ctx.U1().transpose()));

    Matrix left(n, n + 1);
    left << Matrix::Identity(n, n), xk;

    const double nu2 = ctx.v22norm() * ctx.v22norm();
    MkMatrix out;
    out.k = k;
    out.data = ((left * V * K) * d_inv.asDiagonal()) * (middle * W) / nu2;
    return out;
}

inline double kappa_abs(const MkMatrix& mk) { return detail::spectral_norm(mk.data); }

inline double kappa_rel(const MkMatrix& mk, const Matrix& A, const Vector& b, const Vector& xk)
{
    detail::require_nonzero_solution(xk, "kappa_rel");
    return kappa_abs(mk) * augment(A, b).norm() / xk.norm();
}

/// |M_k| vec([|A| |b|])
inline Vector mixed_numerator(const MkMatrix& mk, const Matrix& A, const Vector& b)
{
    const Vector h = vec(augment(A, b)).cwiseAbs();
    detail::require(mk.data.cols() == h.size(), Errc::DimensionMismatch, "mixed: M_k and data disagree");
    return mk.data.cwiseAbs() * h;
}

inline double mixed_cond(const MkMatrix& mk, const Matrix& A, const Vector& b, const Vector& xk)
{
    detail::require_nonzero_solution(xk, "mixed_cond");
    return mixed_numerator(mk, A, b).lpNorm<Eigen::Infinity>() / xk.lpNorm<Eigen::Infinity>();
}

inline double compwise_cond(const MkMatrix& mk, const Matrix& A, const Vector& b, const Vector& xk)
{
    return componentwise_inf_ratio(mixed_numerator(mk, A, b), xk);
}

// ---------------------------------------------------------------------------
// Compact factor

/// M_k written as  M_k vec(dH) = sum_{a,b} T(:,a,b) G_ab(dH)  with
///   G_ab = sigma_a u_a^T dH v_{k+b} + sigma_{k+b} u_{k+b}^T dH v_a.
/// The rank-one functionals dH -> u^T dH v are Frobenius-orthonormal, so
/// M_k M_k^T = sum T(:,a,b) T(:,a,b)^T (sigma_a^2 + sigma_{k+b}^2).
class JacobianFactor {
public:
    explicit JacobianFactor(const TruncationContext& ctx)
        : ctx_(ctx), xk_(ttls_solution_vector(ctx))
    {
        const Index n = ctx_.n(), k = ctx_.k(), r = n + 1 - k, p = ctx_.p();
        const Matrix gaps = build_gap_reciprocal(ctx_).data; // r x k
        const double inv_nu2 = 1.0 / (ctx_.v22norm() * ctx_.v22norm());
        const Matrix V11 = ctx_.V11();
        const Matrix V12 = ctx_.V12();
        const Vector v21 = ctx_.V21().transpose();
        const Vector v22 = ctx_.V22().transpose();
        const Vector& s = ctx_.svd().sigma;

        T_.resize(n, k * r);
        weights_.resize(k * r);
        for (Index b = 0; b < r; ++b) {
            const double sb = k + b < p ? s(k + b) : 0.0;
            for (Index a = 0; a < k; ++a) {
                T_.col(a + b * k) = (V11.col(a) * v22(b) + V12.col(b) * v21(a) + 2.0 * xk_ * v21(a) * v22(b))
                                    * (gaps(b, a) * inv_nu2);
                weights_(a + b * k) = std::sqrt(s(a) * s(a) + sb * sb);
            }
        }
    }

    [[nodiscard]] const TruncationContext& context() const noexcept { return ctx_; }
    [[nodiscard]] const Vector& xk() const noexcept { return xk_; }
    [[nodiscard]] Index rows() const noexcept { return ctx_.n(); }
    [[nodiscard]] Index cols() const noexcept { return ctx_.m() * (ctx_.n() + 1); }

    /// Columns l*m .. l*m + m-1 of M_k, i.e. the derivative with respect
    /// to column l of [A b].
    [[nodiscard]] Matrix column_block(Index l) const
    {
        const Index n = ctx_.n(), k = ctx_.k(), r = n + 1 - k, q = ctx_.p() - k;
        detail::require(l >= 0 && l <= n, Errc::DimensionMismatch, "column_block: index out of range");
        const Matrix& V = ctx_.svd().V;
        Matrix Ql = Matrix::Zero(n, k);
        Matrix Pl(n, q);
        const Vector v1l = V.row(l).head(k).transpose();
        for (Index b = 0; b < r; ++b) {
            const auto Tb = T_.middleCols(b * k, k);
            Ql.noalias() += V(l, k + b) * Tb;
            if (b < q) {
                Pl.col(b).noalias() = Tb * v1l;
            }
        }
        const Matrix& U = ctx_.svd().U;
        Matrix block = Ql * (U.leftCols(k) * ctx_.sigma1().asDiagonal()).transpose();
        if (q > 0) {
            block.noalias() += Pl * (U.middleCols(k, q) * ctx_.sigma2().asDiagonal()).transpose();
        }
        return block;
    }

    /// Full M_k (guarded like assemble_mk).
    [[nodiscard]] MkMatrix assemble(double entry_cap = kDefaultMkEntryCap) const
    {
        const double entries = static_cast<double>(rows()) * static_cast<double>(cols());
        if (entries > entry_cap) {
            throw Error(Errc::MemoryGuard, "JacobianFactor::assemble: M_k too large");
        }
        MkMatrix out;
        out.k = ctx_.k();
        out.data.resize(rows(), cols());
        const Index m = ctx_.m();
        for (Index l = 0; l <= ctx_.n(); ++l) {
            out.data.middleCols(l * m, m) = column_block(l);
        }
        return out;
    }

    /// T scaled by the orthonormal-functional weights; F F^T = M_k M_k^T.
    [[nodiscard]] Matrix gram_factor() const { return T_ * weights_.asDiagonal(); }

    [[nodiscard]] double spectral_norm() const { return detail::spectral_norm(gram_factor()); }

    /// 2-norms of the rows of M_k.
    [[nodiscard]] Vector row_norms() const { return gram_factor().rowwise().norm(); }

    /// |M_k| * w for w of length m(n+1), streamed block by block.
    [[nodiscard]] Vector abs_times(const Vector& w) const
    {
        detail::require(w.size() == cols(), Errc::DimensionMismatch, "abs_times: weight length");
        const Index m = ctx_.m();
        Vector out = Vector::Zero(rows());
        for (Index l = 0; l <= ctx_.n(); ++l) {
            out.noalias() += column_block(l).cwiseAbs() * w.segment(l * m, m);
        }
        return out;
    }

private:
    TruncationContext ctx_;
    Vector xk_;
    Matrix T_;       // n x k(n+1-k), column a + b*k
    Vector weights_; // sqrt(sigma_a^2 + sigma_{k+b}^2)
};

// ---------------------------------------------------------------------------
// Reports

struct CondReport {
    double kappa_abs = 0.0;
    double kappa_rel = 0.0;
    double mixed = 0.0;
    double compwise = 0.0;
    Vector abs_vector; ///< |M_k| vec([|A| |b|])
};

inline CondReport make_cond_report(double kappa_abs_value, const Vector& abs_vector, double frobenius,
                                   const Vector& xk)
{
    detail::require_nonzero_solution(xk, "condition numbers");
    CondReport out;
    out.kappa_abs = kappa_abs_value;
    out.kappa_rel = kappa_abs_value * frobenius / xk.norm();
    out.abs_vector = abs_vector;
    out.mixed = abs_vector.lpNorm<Eigen::Infinity>() / xk.lpNorm<Eigen::Infinity>();
    out.compwise = componentwise_inf_ratio(abs_vector, xk);
    return out;
}

/// Exact unstructured condition numbers; memory stays O(n m) regardless of
/// the size of M_k.
inline CondReport condition_numbers(const JacobianFactor& factor, const Matrix& A, const Vector& b)
{
    const Matrix H = augment(A, b);
    return make_cond_report(factor.spectral_norm(), factor.abs_times(vec(H).cwiseAbs()), H.norm(),
                            factor.xk());
}

inline CondReport condition_numbers(const TruncationContext& ctx, const Matrix& A, const Vector& b)
{
    return condition_numbers(JacobianFactor(ctx), A, b);
}

/// Same numbers computed from an assembled M_k.
inline CondReport condition_numbers(const MkMatrix& mk, const Matrix& A, const Vector& b, const Vector& xk)
{
    return make_cond_report(kappa_abs(mk), mixed_numerator(mk, A, b), augment(A, b).norm(), xk);
}

// ---------------------------------------------------------------------------
// Untruncated TLS (k = n) closed forms

struct UntruncatedReport {
    double kappa1_abs = 0.0;
    double kappa1_rel = 0.0;
    double m1 = 0.0;
    double c1 = 0.0;
    Vector xn;
    Matrix Mn;        ///< P^{-1} [ -x^T (x) Q + I (x) r^T,  Q ],  Q = A^T + 2 x r^T / (1 + x^T x)
    Matrix M_plus_N;  ///< the same derivative in the M + N form used for m1 and c1
    Matrix P;         ///< A^T A - sigma_{n+1}^2 I
    Vector r;         ///< b - A x_n
    double sigma_tilde_n = 0.0;
    double sigma_n_plus_1 = 0.0;
};

inline UntruncatedReport untruncated_report(const Matrix& A, const Vector& b, const Tolerances& tol = {})
{
    const AugmentedSvd svd = augmented_svd(A, b);
    const Index m = A.rows(), n = A.cols();

    UntruncatedReport out;
    out.sigma_n_plus_1 = svd.p() == n + 1 ? svd.sigma(n) : 0.0;
    if (m >= n) {
        out.sigma_tilde_n = Eigen::JacobiSVD<Matrix>(A).singularValues()(n - 1);
    }
    if (!(out.sigma_tilde_n - out.sigma_n_plus_1 > tol.gap * svd.sigma(0))) {
        throw Error(Errc::GenericityViolation, "untruncated TLS needs sigma_min(A) > sigma_{n+1}([A b])");
    }
    const double s2 = out.sigma_n_plus_1 * out.sigma_n_plus_1;
    out.P = A.transpose() * A - s2 * Matrix::Identity(n, n);
    const Eigen::LDLT<Matrix> P_ldlt(out.P);
    out.xn = P_ldlt.solve(A.transpose() * b);
    out.r = b - A * out.xn;
    detail::require_nonzero_solution(out.xn, "untruncated_report");

    const double xx = out.xn.squaredNorm();
    const Matrix Q = A.transpose() + 2.0 * out.xn * out.r.transpose() / (1.0 + xx);
    Matrix inner(n, m * (n + 1));
    inner << -kron(Matrix(out.xn.transpose()), Q) + kron(Matrix::Identity(n, n), Matrix(out.r.transpose())), Q;
    out.Mn = P_ldlt.solve(inner);

    // M = [P^{-1} (x) r^T - x^T (x) P^{-1} A^T,  P^{-1} A^T],  N = 2 sigma_{n+1} P^{-1} x (v_{n+1}^T (x) u_{n+1}^T)
    const Matrix Pinv = P_ldlt.solve(Matrix::Identity(n, n));
    const Matrix PinvAt = Pinv * A.transpose();
    Matrix Mz(n, m * (n + 1));
    Mz << kron(Pinv, Matrix(out.r.transpose())) - kron(Matrix(out.xn.transpose()), PinvAt), PinvAt;
    if (svd.p() == n + 1) {
        const Vector uv = kron(Matrix(svd.V.col(n)), Matrix(svd.U.col(n))); // vec(u v^T)
        Mz += 2.0 * out.sigma_n_plus_1 * (Pinv * out.xn) * uv.transpose();
    }
    out.M_plus_N = Mz;

    const Vector h = vec(augment(A, b)).cwiseAbs();
    const Vector num = out.M_plus_N.cwiseAbs() * h;
    out.m1 = num.lpNorm<Eigen::Infinity>() / out.xn.lpNorm<Eigen::Infinity>();
    out.c1 = componentwise_inf_ratio(num, out.xn);

    // kappa_1 = sqrt(1 + ||x||^2) ||V11^{-T} S||_2, s_i = sqrt(sigma_i^2 + s^2) / (sigma_i^2 - s^2)
    const Matrix V11 = svd.V.topLeftCorner(n, n);
    Vector sdiag(n);
    for (Index i = 0; i < n; ++i) {
        const double si2 = svd.sigma(i) * svd.sigma(i);
        sdiag(i) = std::sqrt(si2 + s2) / (si2 - s2);
    }
    const Matrix Y = V11.transpose().fullPivLu().solve(Matrix(sdiag.asDiagonal()));
    out.kappa1_abs = std::sqrt(1.0 + xx) * detail::spectral_norm(Y);
    out.kappa1_rel = out.kappa1_abs * svd.frobenius() / out.xn.norm();
    return out;
}

inline MkMatrix closed_form_mk(const UntruncatedReport& rep)
{
    MkMatrix out;
    out.data = rep.Mn;
    out.k = rep.xn.size();
    out.provenance = MkMatrix::Provenance::ClosedFormKEqN;
    return out;
}

} // namespace ttls
