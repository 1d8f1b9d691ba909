#pragma once

// Small-sample statistical condition estimation. Each run draws ell
// orthonormal directions, takes one derivative per direction, and scales
// the root-sum-of-squares by a ratio of Wallis factors.

#include "ttls/condition.hpp"
#include "ttls/derivative.hpp"
#include "ttls/rng.hpp"
#include "ttls/structure.hpp"

#include <cstdint>
#include <numbers>
#include <optional>
#include <string_view>

namespace ttls {

struct WallisFactor {
    Index p = 0;
    double exact = 0.0;
    double approx = 0.0;
};

/// omega_p = E|u_1| for u uniform on the unit sphere in R^p, scaled so that
/// omega_p^{-1} |u^T z| estimates ||z||_2.
inline WallisFactor wallis(Index p)
{
    detail::require(p >= 1, Errc::InvalidArgument, "wallis: p must be >= 1");
    WallisFactor w;
    w.p = p;
    if (p % 2 == 1) {
        // 1*3*5*...*(p-2) / (2*4*6*...*(p-1))
        double v = 1.0;
        for (Index j = 1; 2 * j <= p - 1; ++j) {
            v *= static_cast<double>(2 * j - 1) / static_cast<double>(2 * j);
        }
        w.exact = v;
    } else {
        // (2/pi) * 2*4*...*(p-2) / (3*5*...*(p-1))
        double v = 2.0 / std::numbers::pi;
        for (Index j = 1; 2 * j <= p - 2; ++j) {
            v *= static_cast<double>(2 * j) / static_cast<double>(2 * j + 1);
        }
        w.exact = v;
    }
    w.approx = std::sqrt(2.0 / (std::numbers::pi * (static_cast<double>(p) - 0.5)));
    return w;
}

struct SceConfig {
    Index ell = 3;
    std::uint64_t seed = 0;
    bool use_exact_wallis = false;
    int max_attempts = 3; ///< draws tried before RankDeficientSample escapes
};

enum class SceMode { Normwise, Componentwise, Structured };

inline std::string_view to_string(SceMode mode) noexcept
{
    switch (mode) {
    case SceMode::Normwise: return "normwise";
    case SceMode::Componentwise: return "componentwise";
    case SceMode::Structured: return "structured";
    }
    return "unknown";
}

struct SceReport {
    Vector abs_vector;
    std::optional<double> kappa_est;
    std::optional<double> mixed_est;
    std::optional<double> compwise_est;
    Index ell = 0;
    std::uint64_t seed = 0;
    SceMode mode = SceMode::Normwise;
    std::size_t evaluations = 0;
};

namespace detail {

inline double wallis_ratio(Index ell, Index p, bool exact)
{
    if (ell == p) {
        return 1.0;
    }
    const WallisFactor we = wallis(ell), wp = wallis(p);
    return exact ? we.exact / wp.exact : we.approx / wp.approx;
}

/// ell orthonormal Gaussian columns in R^dim.
inline Matrix orthonormal_sample(Rng& rng, Index dim, const SceConfig& cfg)
{
    for (int attempt = 1;; ++attempt) {
        try {
            return mgs_orthonormalize(rng.normal_matrix(dim, cfg.ell));
        } catch (const Error& e) {
            if (e.code() != Errc::RankDeficientSample || attempt >= cfg.max_attempts) {
                throw;
            }
        }
    }
}

inline void check_ell(const SceConfig& cfg, Index p)
{
    require(cfg.ell >= 1 && cfg.ell <= p, Errc::InvalidArgument,
            "SCE: ell = " + std::to_string(cfg.ell) + " must lie in [1, " + std::to_string(p) + "]");
}

template <typename Direction>
Vector accumulate(const DerivativeKernel& kernel, const Matrix& Q, Direction&& direction)
{
    Vector sumsq = Vector::Zero(kernel.context().n());
    for (Index i = 0; i < Q.cols(); ++i) {
        sumsq += kernel(direction(Q.col(i))).cwiseAbs2();
    }
    return sumsq.cwiseSqrt();
}

} // namespace detail

/// Normwise perturbations of [A b].
inline SceReport sce_normwise(const DerivativeKernel& kernel, const SceConfig& cfg)
{
    const TruncationContext& ctx = kernel.context();
    const Index m = ctx.m(), n = ctx.n(), p = m * (n + 1);
    detail::check_ell(cfg, p);
    detail::require_nonzero_solution(kernel.xk(), "sce_normwise");
    const std::size_t before = kernel.evaluations();

    Rng rng(cfg.seed);
    const Matrix Q = detail::orthonormal_sample(rng, p, cfg);
    SceReport out;
    out.abs_vector = detail::wallis_ratio(cfg.ell, p, cfg.use_exact_wallis)
                     * detail::accumulate(kernel, Q, [&](const auto& q) { return unvec(q, m, n + 1); });
    out.kappa_est = out.abs_vector.norm() * ctx.svd().frobenius() / kernel.xk().norm();
    out.ell = cfg.ell;
    out.seed = cfg.seed;
    out.mode = SceMode::Normwise;
    out.evaluations = kernel.evaluations() - before;
    return out;
}

inline SceReport sce_normwise(const TruncationContext& ctx, const Vector& xk, const SceConfig& cfg)
{
    const DerivativeKernel kernel(ctx, xk);
    return sce_normwise(kernel, cfg);
}

/// Componentwise: directions scaled entrywise by the data, dH = [A b] .* unvec(q).
inline SceReport sce_componentwise(const DerivativeKernel& kernel, const Matrix& A, const Vector& b,
                                   const SceConfig& cfg)
{
    const TruncationContext& ctx = kernel.context();
    const Index m = ctx.m(), n = ctx.n(), p = m * (n + 1);
    detail::require(A.rows() == m && A.cols() == n, Errc::DimensionMismatch, "sce_componentwise: A shape");
    detail::check_ell(cfg, p);
    const Vector& xk = kernel.xk();
    detail::require_nonzero_solution(xk, "sce_componentwise");
    const Matrix H = augment(A, b);
    const std::size_t before = kernel.evaluations();

    Rng rng(cfg.seed);
    const Matrix Q = detail::orthonormal_sample(rng, p, cfg);
    SceReport out;
    out.abs_vector = detail::wallis_ratio(cfg.ell, p, cfg.use_exact_wallis)
                     * detail::accumulate(kernel, Q,
                                          [&](const auto& q) { return Matrix(H.cwiseProduct(unvec(q, m, n + 1))); });
    out.mixed_est = out.abs_vector.lpNorm<Eigen::Infinity>() / xk.lpNorm<Eigen::Infinity>();
    out.compwise_est = componentwise_inf_ratio(out.abs_vector, xk);
    out.ell = cfg.ell;
    out.seed = cfg.seed;
    out.mode = SceMode::Componentwise;
    out.evaluations = kernel.evaluations() - before;
    return out;
}

inline SceReport sce_componentwise(const TruncationContext& ctx, const Matrix& A, const Vector& b,
                                   const Vector& xk, const SceConfig& cfg)
{
    const DerivativeKernel kernel(ctx, xk);
    return sce_componentwise(kernel, A, b, cfg);
}

/// Structured: directions in coefficient space (a, b), scaled by [a; b].
inline SceReport sce_structured(const DerivativeKernel& kernel, const LinearStructure& s, const Vector& a,
                                const Vector& b, const SceConfig& cfg)
{
    const TruncationContext& ctx = kernel.context();
    const Index m = ctx.m(), n = ctx.n(), t = s.t(), p = t + m;
    detail::require(s.m == m && s.n == n, Errc::DimensionMismatch, "sce_structured: structure shape");
    detail::require(a.size() == t && b.size() == m, Errc::DimensionMismatch, "sce_structured: a or b length");
    detail::check_ell(cfg, p);
    const Vector& xk = kernel.xk();
    detail::require_nonzero_solution(xk, "sce_structured");
    Vector ab(p);
    ab << a, b;
    const std::size_t before = kernel.evaluations();

    Rng rng(cfg.seed);
    const Matrix Q = detail::orthonormal_sample(rng, p, cfg);
    SceReport out;
    out.abs_vector = detail::wallis_ratio(cfg.ell, p, cfg.use_exact_wallis)
                     * detail::accumulate(kernel, Q, [&](const auto& q) {
                           const Vector xi = ab.cwiseProduct(q);
                           SparseMatrix dH(m, n + 1);
                           std::vector<Triplet> entries;
                           for (Index i = 0; i < t; ++i) {
                               for (const auto& e : s.basis[i]) {
                                   entries.emplace_back(e.row(), e.col(), xi(i) * e.value());
                               }
                           }
                           for (Index i = 0; i < m; ++i) {
                               entries.emplace_back(i, n, xi(t + i));
                           }
                           dH.setFromTriplets(entries.begin(), entries.end());
                           return dH;
                       });
    out.kappa_est = out.abs_vector.norm() * ab.norm() / xk.norm();
    out.mixed_est = out.abs_vector.lpNorm<Eigen::Infinity>() / xk.lpNorm<Eigen::Infinity>();
    out.compwise_est = componentwise_inf_ratio(out.abs_vector, xk);
    out.ell = cfg.ell;
    out.seed = cfg.seed;
    out.mode = SceMode::Structured;
    out.evaluations = kernel.evaluations() - before;
    return out;
}

inline SceReport sce_structured(const TruncationContext& ctx, const LinearStructure& s, const Vector& a,
                                const Vector& b, const Vector& xk, const SceConfig& cfg)
{
    const DerivativeKernel kernel(ctx, xk);
    return sce_structured(kernel, s, a, b, cfg);
}

} // namespace ttls
