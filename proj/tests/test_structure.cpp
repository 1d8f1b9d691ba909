#include "oracles.hpp"
#include "ttls/harness.hpp"
#include "ttls/structure.hpp"

#include <gtest/gtest.h>

using namespace ttls;

namespace {

std::pair<Matrix, Vector> random_toeplitz_problem(std::mt19937_64& gen, Index m, Index n)
{
    const Matrix c = oracle::random_matrix(gen, m, 1), r = oracle::random_matrix(gen, n, 1);
    return {oracle::toeplitz(c.col(0), r.col(0)), oracle::random_matrix(gen, m, 1).col(0)};
}

} // namespace

TEST(Toeplitz, SizeAndOrdering)
{
    const LinearStructure s = toeplitz_structure(3, 2);
    EXPECT_EQ(s.t(), 4);
    EXPECT_TRUE(s.disjoint_support);
    Matrix E1(3, 2);
    E1 << 1, 0, 0, 1, 0, 0;
    EXPECT_EQ(materialize(s, Vector::Unit(4, 0)), E1);

    const LinearStructure s2 = toeplitz_structure(2, 2);
    Vector a(3);
    a << 1, 2, 3;
    Matrix T(2, 2);
    T << 1, 3, 2, 1;
    EXPECT_EQ(materialize(s2, a), T);
    EXPECT_EQ(toeplitz_coefficients(T), a);
}

TEST(Toeplitz, SupportsPartitionTheIndexSet)
{
    const LinearStructure s = toeplitz_structure(5, 3);
    Matrix sum = Matrix::Zero(5, 3);
    for (Index i = 0; i < s.t(); ++i) {
        sum += materialize(s, Vector::Unit(s.t(), i)).cwiseAbs();
    }
    EXPECT_EQ(sum, Matrix::Ones(5, 3));
}

TEST(Materialize, LinearAndZero)
{
    const LinearStructure s = toeplitz_structure(4, 3);
    EXPECT_EQ(materialize(s, Vector::Zero(6)), Matrix::Zero(4, 3));
    std::mt19937_64 gen(31);
    const Vector a1 = oracle::random_matrix(gen, 6, 1).col(0), a2 = oracle::random_matrix(gen, 6, 1).col(0);
    EXPECT_LE((apply_phi(s, Vector(0.5 * a1 + a2)) - 0.5 * apply_phi(s, a1) - apply_phi(s, a2)).norm(), 1e-15);
    EXPECT_THROW(materialize(s, Vector::Zero(5)), Error);
}

TEST(Materialize, Example2RoundTrip)
{
    const Problem p = gen_example2(6);
    EXPECT_EQ(materialize(*p.structure, p.a), p.A);
    EXPECT_EQ(structure_coefficients(*p.structure, p.A), p.a);
}

TEST(Phi, ColumnsAndGram)
{
    const LinearStructure s = toeplitz_structure(4, 3);
    const Matrix Phi(phi_matrix(s));
    for (Index i = 0; i < s.t(); ++i) {
        EXPECT_EQ(Vector(Phi.col(i)), apply_phi(s, Vector::Unit(s.t(), i)));
    }
    const Matrix G = Phi.transpose() * Phi;
    // diagonal lengths: d = 0..3 below (3,3,2,1), then 2,1 above
    Vector lens(6);
    lens << 3, 3, 2, 1, 2, 1;
    EXPECT_EQ(Matrix(G.diagonal().asDiagonal()), G);
    EXPECT_EQ(Vector(G.diagonal()), lens);

    const Matrix Pn(phi_matrix(normalized(s)));
    EXPECT_LE((Pn.transpose() * Pn - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(CustomStructure, ValidationAndFlags)
{
    // overlapping but independent
    std::vector<std::vector<Triplet>> ok = {{Triplet(0, 0, 1.0), Triplet(1, 1, 1.0)}, {Triplet(0, 0, 1.0)}};
    const LinearStructure s = make_structure(2, 2, ok);
    EXPECT_FALSE(s.disjoint_support);
    EXPECT_FALSE(s.normalized);

    std::vector<std::vector<Triplet>> dep = {{Triplet(0, 0, 1.0), Triplet(1, 1, 1.0)},
                                             {Triplet(0, 0, 2.0), Triplet(1, 1, 2.0)}};
    EXPECT_THROW(make_structure(2, 2, dep), Error);
    EXPECT_THROW(make_structure(2, 2, {{Triplet(2, 0, 1.0)}}), Error);
    EXPECT_THROW(make_structure(2, 2, {{Triplet(0, 0, 0.0)}}), Error);
    EXPECT_TRUE(make_structure(2, 2, {{Triplet(0, 1, 1.0)}}).normalized);
}

TEST(StructuredCond, FullStructureEqualsUnstructured)
{
    std::mt19937_64 gen(32);
    const auto [A, b] = oracle::random_problem(gen, 6, 3);
    const AugmentedSvd s = augmented_svd(A, b);
    for (Index k = 1; k <= 3; ++k) {
        const TruncationContext ctx = truncate(s, k);
        const DerivativeKernel g(ctx);
        const CondReport u = condition_numbers(ctx, A, b);
        const LinearStructure full = full_structure(6, 3);
        const StructuredCondReport r = structured_cond(g, full, vec(A), b);
        EXPECT_NEAR(r.kappa_s_abs, u.kappa_abs, 1e-12 * u.kappa_abs);
        EXPECT_NEAR(r.kappa_s_rel, u.kappa_rel, 1e-12 * u.kappa_rel);
        EXPECT_NEAR(r.mixed_s, u.mixed, 1e-12 * u.mixed);
        EXPECT_NEAR(r.compwise_s, u.compwise, 1e-12 * u.compwise);
    }
}

TEST(StructuredCond, KernelAndAssembledPathsAgree)
{
    std::mt19937_64 gen(33);
    const auto [A, b] = random_toeplitz_problem(gen, 7, 4);
    const LinearStructure s = toeplitz_structure(7, 4);
    const Vector a = toeplitz_coefficients(A);
    const TruncationContext ctx = truncate(augmented_svd(A, b), 2);
    const DerivativeKernel g(ctx);
    const Matrix J1 = structured_jacobian(g, s);
    const Matrix J2 = structured_jacobian(assemble_mk(ctx), s);
    EXPECT_LE((J1 - J2).norm(), 1e-12 * J2.norm());
    EXPECT_EQ(g.evaluations(), static_cast<std::size_t>(s.t() + 7));
    const StructuredCondReport r1 = structured_cond(g, s, a, b);
    const StructuredCondReport r2 = structured_cond(assemble_mk(ctx), s, a, b, g.xk());
    EXPECT_NEAR(r1.mixed_s, r2.mixed_s, 1e-12 * r2.mixed_s);
    EXPECT_NEAR(r1.kappa_s_rel, r2.kappa_s_rel, 1e-12 * r2.kappa_s_rel);
}

TEST(StructuredCond, DominanceOnRandomToeplitz)
{
    std::mt19937_64 gen(34);
    for (int t = 0; t < 25; ++t) {
        const Index m = 5 + t % 4, n = 2 + t % 3;
        const auto [A, b] = random_toeplitz_problem(gen, m, n);
        const AugmentedSvd svd = augmented_svd(A, b);
        const Index k = 1 + t % n;
        const TruncationContext ctx = truncate(svd, k);
        const DerivativeKernel g(ctx);
        const CondReport u = condition_numbers(ctx, A, b);
        const LinearStructure raw = toeplitz_structure(m, n);
        const Vector a = toeplitz_coefficients(A);
        const StructuredCondReport sr = structured_cond(g, raw, a, b);
        EXPECT_LE(sr.mixed_s, u.mixed * (1 + 1e-12));
        EXPECT_LE(sr.compwise_s, u.compwise * (1 + 1e-12));
        const LinearStructure nrm = normalized(raw);
        const StructuredCondReport sn = structured_cond(g, nrm, normalized_coefficients(raw, a), b);
        EXPECT_LE(sn.kappa_s_abs, u.kappa_abs * (1 + 1e-12));
        // the normalized basis reproduces the same matrix, so m_s is basis independent
        EXPECT_NEAR(sn.mixed_s, sr.mixed_s, 1e-12 * sr.mixed_s);
    }
}

TEST(StructuredCond, LevelNMatchesKroneckerOracle)
{
    std::mt19937_64 gen(35);
    int checked = 0;
    while (checked < 10) {
        const auto [A, b] = random_toeplitz_problem(gen, 6, 3);
        try {
            untruncated_report(A, b);
        } catch (const Error&) {
            continue;
        }
        const LinearStructure s = toeplitz_structure(6, 3);
        const Vector a = toeplitz_coefficients(A);
        const TruncationContext ctx = truncate(augmented_svd(A, b), 3);
        const DerivativeKernel g(ctx);
        MkMatrix K;
        K.data = oracle::untruncated_K(A, b);
        EXPECT_LE((K.data - assemble_mk(ctx).data).norm(), 1e-10 * K.data.norm());
        const StructuredCondReport viaK = structured_cond(K, s, a, b, g.xk());
        const StructuredCondReport viaKernel = structured_cond(g, s, a, b);
        EXPECT_NEAR(viaK.mixed_s, viaKernel.mixed_s, 1e-10 * viaKernel.mixed_s);
        ++checked;
    }
}

TEST(StructuredCond, ZeroSolutionIsAnError)
{
    Matrix A(3, 2);
    A << 3, 0, 0, 2, 0, 0;
    Vector b(3);
    b << 0, 0, 1;
    const DerivativeKernel g(truncate(augmented_svd(A, b), 1));
    EXPECT_THROW(structured_cond(g, full_structure(3, 2), vec(A), b), Error);
}
