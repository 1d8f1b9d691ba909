#include "oracles.hpp"
#include "ttls/condition.hpp"
#include "ttls/harness.hpp"

#include <gtest/gtest.h>

using namespace ttls;

namespace {

struct Exact {
    CondReport rep;
    Vector x;
};

Exact exact(const Matrix& A, const Vector& b, Index k)
{
    const TruncationContext ctx = truncate(augmented_svd(A, b), k);
    return {condition_numbers(ctx, A, b), solve_ttls(ctx).xk};
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST(ComponentwiseRatio, ZeroOverZeroAndDivisionByZero)
{
    Vector num(3), den(3);
    num << 1, 0, 2;
    den << 2, 0, 1;
    EXPECT_DOUBLE_EQ(componentwise_inf_ratio(num, den), 2.0);
    den(2) = 0.0;
    EXPECT_TRUE(std::isinf(componentwise_inf_ratio(num, den)));
}

TEST(AssembleMk, ShapeAndColumnsMatchKernel)
{
    std::mt19937_64 gen(21);
    for (auto [m, n] : {std::pair<Index, Index>{6, 4}, {4, 5}, {9, 3}}) {
        const auto [A, b] = oracle::random_problem(gen, m, n);
        const AugmentedSvd s = augmented_svd(A, b);
        for (Index k = 1; k < s.p(); ++k) {
            const TruncationContext ctx = truncate(s, k);
            const MkMatrix mk = assemble_mk(ctx);
            ASSERT_EQ(mk.data.rows(), n);
            ASSERT_EQ(mk.data.cols(), m * (n + 1));
            const DerivativeKernel g(ctx);
            for (Index j = 0; j < m * (n + 1); ++j) {
                const Vector col = g(unvec(Vector::Unit(m * (n + 1), j), m, n + 1));
                EXPECT_LE((col - mk.data.col(j)).cwiseAbs().maxCoeff(), 1e-12 * (1 + col.norm()));
            }
        }
    }
}

TEST(AssembleMk, MemoryGuard)
{
    std::mt19937_64 gen(22);
    const auto [A, b] = oracle::random_problem(gen, 6, 4);
    const TruncationContext ctx = truncate(augmented_svd(A, b), 2);
    EXPECT_THROW(assemble_mk(ctx, 10.0), Error);
    EXPECT_THROW(JacobianFactor(ctx).assemble(10.0), Error);
}

TEST(AssembleMk, LevelNMatchesClosedForm)
{
    std::mt19937_64 gen(23);
    int checked = 0;
    while (checked < 20) {
        const auto [A, b] = oracle::random_problem(gen, 7, 3);
        UntruncatedReport ur;
        try {
            ur = untruncated_report(A, b);
        } catch (const Error&) {
            continue;
        }
        const MkMatrix mk = assemble_mk(truncate(augmented_svd(A, b), 3));
        EXPECT_LE((mk.data - ur.Mn).norm(), 1e-10 * mk.data.norm());
        EXPECT_LE((mk.data - ur.M_plus_N).norm(), 1e-10 * mk.data.norm());
        EXPECT_EQ(closed_form_mk(ur).provenance, MkMatrix::Provenance::ClosedFormKEqN);
        ++checked;
    }
}

TEST(AssembleMk, AgreesWithFiniteDifferences)
{
    std::mt19937_64 gen(24);
    const auto [A, b] = oracle::random_problem(gen, 5, 3);
    for (Index k = 1; k <= 3; ++k) {
        const MkMatrix mk = assemble_mk(truncate(augmented_svd(A, b), k));
        const Matrix J = oracle::fd_jacobian(A, b, k, 1e-6);
        EXPECT_LE((mk.data - J).cwiseAbs().maxCoeff(), 1e-5 * (1 + J.cwiseAbs().maxCoeff()));
    }
}

TEST(JacobianFactor, MatchesAssembledMatrix)
{
    std::mt19937_64 gen(25);
    for (auto [m, n] : {std::pair<Index, Index>{8, 5}, {3, 5}, {12, 2}}) {
        const auto [A, b] = oracle::random_problem(gen, m, n);
        const AugmentedSvd s = augmented_svd(A, b);
        for (Index k = 1; k < s.p(); ++k) {
            const TruncationContext ctx = truncate(s, k);
            const JacobianFactor F(ctx);
            const MkMatrix mk = assemble_mk(ctx);
            const double scale = mk.data.norm();
            EXPECT_LE((F.assemble().data - mk.data).norm(), 1e-12 * scale);
            EXPECT_NEAR(F.spectral_norm(), kappa_abs(mk), 1e-12 * scale);
            EXPECT_LE((F.row_norms() - mk.data.rowwise().norm()).norm(), 1e-12 * scale);
            const Vector w = vec(augment(A, b)).cwiseAbs();
            EXPECT_LE((F.abs_times(w) - mk.data.cwiseAbs() * w).norm(), 1e-12 * scale * w.norm());

            const CondReport a = condition_numbers(F, A, b);
            const CondReport c = condition_numbers(mk, A, b, F.xk());
            EXPECT_NEAR(a.kappa_rel, c.kappa_rel, 1e-10 * c.kappa_rel);
            EXPECT_NEAR(a.mixed, c.mixed, 1e-10 * c.mixed);
            EXPECT_NEAR(a.compwise, c.compwise, 1e-10 * c.compwise);
            EXPECT_NEAR(kappa_rel(mk, A, b, F.xk()), c.kappa_rel, 1e-12 * c.kappa_rel);
            EXPECT_NEAR(mixed_cond(mk, A, b, F.xk()), c.mixed, 1e-12 * c.mixed);
            EXPECT_NEAR(compwise_cond(mk, A, b, F.xk()), c.compwise, 1e-12 * c.compwise);
        }
    }
}

TEST(CondReport, Example1ReferenceValues)
{
    {
        const auto [A, b] = gen_example1(3);
        const Exact e1 = exact(A, b, 1);
        EXPECT_LE(rel(e1.rep.kappa_rel, 1.18e4), 0.01);
        EXPECT_LE(rel(e1.rep.mixed, 4.50), 0.01);
        EXPECT_LE(rel(e1.rep.compwise, 16.20), 0.01);
        const Exact e2 = exact(A, b, 2);
        EXPECT_LE(rel(e2.rep.kappa_rel, 4.11e3), 0.01);
        EXPECT_LE(rel(e2.rep.mixed, 3.33), 0.01);
        EXPECT_LE(rel(e2.rep.compwise, 4.50), 0.01);
    }
    {
        const auto [A, b] = gen_example1(6);
        EXPECT_LE(rel(exact(A, b, 2).rep.kappa_rel, 4.11e6), 0.01);
    }
    {
        const auto [A, b] = gen_example1(9);
        EXPECT_LE(rel(exact(A, b, 1).rep.mixed, 4.50), 0.01);
    }
}

// c at level 1 depends on x_1(1) ~ 6.25e-3s / 1e3, which double precision
// only resolves for small s; see tests/oracles/example1_highprec.py.
TEST(CondReport, Example1LevelOneAgainstHighPrecision)
{
    const auto [A, b] = gen_example1(3);
    const Exact e = exact(A, b, 1);
    EXPECT_NEAR(e.x(0), 6.249999648e-12, 1e-6 * 6.25e-12);
    EXPECT_NEAR(e.x(1), 1.250000105e-4, 1e-12);
    EXPECT_NEAR(e.rep.mixed, 4.500001029, 1e-6);
    EXPECT_NEAR(e.rep.compwise, 16.20000033, 1e-5);
    for (double s : {6.0, 9.0, 12.0}) {
        const auto [As, bs] = gen_example1(s);
        EXPECT_NEAR(exact(As, bs, 1).rep.mixed, 4.5, 1e-6) << "s = " << s;
    }
}

TEST(CondReport, ZeroSolutionIsAnError)
{
    // b orthogonal to range(A) with a large singular gap gives x_1 = 0
    Matrix A(3, 2);
    A << 3, 0, 0, 2, 0, 0;
    Vector b(3);
    b << 0, 0, 1;
    const TruncationContext ctx = truncate(augmented_svd(A, b), 1);
    ASSERT_EQ(solve_ttls(ctx).xk.cwiseAbs().maxCoeff(), 0.0);
    try {
        condition_numbers(ctx, A, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ZeroSolution);
    }
}

TEST(CondReport, InvariantUnderSignFlips)
{
    std::mt19937_64 gen(26);
    const auto [A, b] = oracle::random_problem(gen, 7, 4);
    AugmentedSvd s = augmented_svd(A, b);
    const CondReport r0 = condition_numbers(truncate(s, 2), A, b);
    for (Index j : {0, 1, 3}) {
        s.U.col(j) *= -1.0;
        s.V.col(j) *= -1.0;
    }
    const CondReport r1 = condition_numbers(truncate(s, 2), A, b);
    EXPECT_NEAR(r0.kappa_rel, r1.kappa_rel, 1e-10 * r0.kappa_rel);
    EXPECT_NEAR(r0.mixed, r1.mixed, 1e-10 * r0.mixed);
    EXPECT_NEAR(r0.compwise, r1.compwise, 1e-10 * r0.compwise);
}

TEST(CondReport, MixedBoundedByScaledNormwise)
{
    std::mt19937_64 gen(27);
    for (int t = 0; t < 30; ++t) {
        const Index m = 4 + t % 5, n = 2 + t % 3;
        const auto [A, b] = oracle::random_problem(gen, m, n);
        const AugmentedSvd s = augmented_svd(A, b);
        for (Index k = 1; k < s.p(); ++k) {
            const CondReport r = condition_numbers(truncate(s, k), A, b);
            EXPECT_LE(r.mixed, std::sqrt(double((n + 1) * n * m)) * r.kappa_rel);
        }
    }
}

TEST(Untruncated, Example1)
{
    for (double s : {3.0, 12.0}) {
        const auto [A, b] = gen_example1(s);
        const UntruncatedReport u = untruncated_report(A, b);
        EXPECT_LE(rel(u.kappa1_rel, 4.11 * std::pow(10.0, s)), 0.01);
        if (s == 3.0) {
            EXPECT_LE(rel(u.m1, 3.33), 0.01);
            EXPECT_LE(rel(u.c1, 4.50), 0.01);
        }
    }
}

TEST(Untruncated, EquivalentToTruncatedAtLevelN)
{
    std::mt19937_64 gen(28);
    int checked = 0;
    while (checked < 20) {
        const auto [A, b] = oracle::random_problem(gen, 8, 4);
        UntruncatedReport u;
        try {
            u = untruncated_report(A, b);
        } catch (const Error&) {
            continue;
        }
        const Exact e = exact(A, b, 4);
        EXPECT_LE((u.xn - e.x).norm(), 1e-10 * e.x.norm());
        EXPECT_NEAR(u.kappa1_rel, e.rep.kappa_rel, 1e-8 * e.rep.kappa_rel);
        EXPECT_NEAR(u.m1, e.rep.mixed, 1e-8 * e.rep.mixed);
        EXPECT_NEAR(u.c1, e.rep.compwise, 1e-8 * e.rep.compwise);
        EXPECT_GT(u.sigma_tilde_n, u.sigma_n_plus_1);
        EXPECT_LE((u.P - u.P.transpose()).norm(), 1e-12 * u.P.norm());
        EXPECT_LE((u.r - (b - A * u.xn)).norm(), 1e-12);
        ++checked;
    }
}

TEST(Untruncated, GenericityViolation)
{
    // sigma_min(A) = 0 < sigma_{n+1}
    Matrix A(3, 2);
    A << 1, 0, 0, 0, 0, 0;
    Vector b(3);
    b << 1, 1, 1;
    try {
        untruncated_report(A, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::GenericityViolation);
    }
}
