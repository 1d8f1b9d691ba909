#include "oracles.hpp"
#include "ttls/condition.hpp"
#include "ttls/derivative.hpp"
#include "ttls/harness.hpp"

#include <gtest/gtest.h>

using namespace ttls;

namespace {

/// Hand-built SVD with prescribed singular values and identity factors.
std::shared_ptr<const AugmentedSvd> diagonal_svd(Index m, Index n, std::vector<double> sigma)
{
    auto s = std::make_shared<AugmentedSvd>();
    s->m = m;
    s->n = n;
    s->U = Matrix::Identity(m, m);
    s->V = Matrix::Identity(n + 1, n + 1);
    s->sigma = Vector::Map(sigma.data(), static_cast<Index>(sigma.size()));
    // make V22 nonzero: rotate the first and last rows of V
    const double c = std::sqrt(0.5);
    s->V(0, 0) = c;
    s->V(0, n) = -c;
    s->V(n, 0) = c;
    s->V(n, n) = c;
    return s;
}

} // namespace

TEST(GapReciprocal, SquareishBranch)
{
    const TruncationContext ctx = truncate(diagonal_svd(3, 1, {2, 1}), 1);
    const GapReciprocalMatrix D = build_gap_reciprocal(ctx);
    EXPECT_EQ(D.branch, GapReciprocalMatrix::Branch::MAtLeastNPlus1);
    ASSERT_EQ(D.data.rows(), 1);
    ASSERT_EQ(D.data.cols(), 1);
    EXPECT_DOUBLE_EQ(D.data(0, 0), 1.0 / 3.0);
}

TEST(GapReciprocal, WideBranchPadsWithInverseSquares)
{
    const TruncationContext ctx = truncate(diagonal_svd(2, 2, {2, 1}), 1);
    const GapReciprocalMatrix D = build_gap_reciprocal(ctx);
    EXPECT_EQ(D.branch, GapReciprocalMatrix::Branch::MLessThanNPlus1);
    ASSERT_EQ(D.data.rows(), 2);
    EXPECT_DOUBLE_EQ(D.data(0, 0), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(D.data(1, 0), 1.0 / 4.0);
}

TEST(GapReciprocal, PositiveOnRandomContexts)
{
    std::mt19937_64 gen(5);
    for (int t = 0; t < 10; ++t) {
        const auto [A, b] = oracle::random_problem(gen, 4 + t % 3, 5);
        const AugmentedSvd s = augmented_svd(A, b);
        for (Index k = 1; k < s.p(); ++k) {
            EXPECT_GT(build_gap_reciprocal(truncate(s, k)).data.minCoeff(), 0.0);
        }
    }
}

TEST(DirectionalDerivative, ZeroAndHomogeneousAndAdditive)
{
    std::mt19937_64 gen(6);
    const auto [A, b] = oracle::random_problem(gen, 6, 4);
    const TruncationContext ctx = truncate(augmented_svd(A, b), 2);
    const DerivativeKernel g(ctx);
    EXPECT_EQ(g(Matrix(Matrix::Zero(6, 5))).cwiseAbs().maxCoeff(), 0.0);
    const Matrix d1 = oracle::random_matrix(gen, 6, 5), d2 = oracle::random_matrix(gen, 6, 5);
    const Vector g1 = g(d1), g2 = g(d2);
    EXPECT_LE((g(Matrix(-2.5 * d1)) + 2.5 * g1).norm(), 1e-13 * 2.5 * g1.norm());
    EXPECT_LE((g(Matrix(d1 + d2)) - g1 - g2).norm(), 1e-12 * (g1.norm() + g2.norm()));
}

TEST(DirectionalDerivative, DirectionStructAndDimensionChecks)
{
    std::mt19937_64 gen(7);
    const auto [A, b] = oracle::random_problem(gen, 5, 3);
    const TruncationContext ctx = truncate(augmented_svd(A, b), 2);
    const Vector x = solve_ttls(ctx).xk;
    Direction dir{oracle::random_matrix(gen, 5, 3), oracle::random_matrix(gen, 5, 1).col(0)};
    EXPECT_LE((directional_derivative(ctx, x, dir) - directional_derivative(ctx, x, dir.augmented())).norm(), 0.0);
    EXPECT_THROW(directional_derivative(ctx, x, Matrix(Matrix::Zero(5, 3))), Error);
    Direction bad{Matrix::Zero(4, 3), Vector::Zero(5)};
    EXPECT_THROW(directional_derivative(ctx, x, bad), Error);
}

TEST(DirectionalDerivative, Example1FirstUnitDirection)
{
    const auto [A, b] = gen_example1(3);
    const TruncationContext ctx = truncate(augmented_svd(A, b), 2);
    const DerivativeKernel g(ctx);
    Matrix E = Matrix::Zero(3, 3);
    E(0, 0) = 1.0;
    const Vector d = g(E);
    const MkMatrix mk = assemble_mk(ctx);
    EXPECT_LE((d - mk.data.col(0)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((d - oracle::fd_direction(A, b, 2, E, 1e-6)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(DirectionalDerivative, MatchesAssembledMkOnRandomDirections)
{
    std::mt19937_64 gen(8);
    for (int t = 0; t < 5; ++t) {
        const auto [A, b] = oracle::random_problem(gen, 6, 4);
        const AugmentedSvd s = augmented_svd(A, b);
        for (Index k = 1; k <= 4; ++k) {
            const TruncationContext ctx = truncate(s, k);
            const DerivativeKernel g(ctx);
            const MkMatrix mk = assemble_mk(ctx);
            const double mkinf = mk.data.cwiseAbs().rowwise().sum().maxCoeff();
            for (int d = 0; d < 20; ++d) {
                const Matrix dH = oracle::random_matrix(gen, 6, 5);
                const double err = (g(dH) - mk.data * vec(dH)).lpNorm<Eigen::Infinity>();
                EXPECT_LE(err, 1e-11 * (1 + mkinf * dH.norm()));
            }
        }
    }
}

TEST(DirectionalDerivative, SparseDirectionMatchesDense)
{
    std::mt19937_64 gen(9);
    const auto [A, b] = oracle::random_problem(gen, 8, 5);
    const DerivativeKernel g(truncate(augmented_svd(A, b), 3));
    Eigen::SparseMatrix<double> S(8, 6);
    S.insert(2, 1) = 1.5;
    S.insert(7, 5) = -0.5;
    EXPECT_LE((g(S) - g(Matrix(S))).norm(), 1e-14);
    EXPECT_EQ(g.evaluations(), 2u);
    g.reset_evaluations();
    EXPECT_EQ(g.evaluations(), 0u);
}

TEST(DirectionalDerivative, FiniteDifferenceErrorScalesQuadratically)
{
    std::mt19937_64 gen(10);
    const auto [A, b] = oracle::random_problem(gen, 6, 4);
    const DerivativeKernel g(truncate(augmented_svd(A, b), 2));
    const Matrix dH = oracle::random_matrix(gen, 6, 5);
    const Vector exact = g(dH);
    const double e5 = (oracle::fd_direction(A, b, 2, dH, 1e-3) - exact).norm();
    const double e6 = (oracle::fd_direction(A, b, 2, dH, 1e-4) - exact).norm();
    // the truncation error dominates at these steps, so it drops by ~100
    EXPECT_GT(e5 / e6, 30.0);
    EXPECT_LT(e5 / e6, 300.0);
}

TEST(DirectionalDerivative, WideProblems)
{
    // m < n + 1 exercises the zero-padded rows of Sigma2
    std::mt19937_64 gen(13);
    const auto [A, b] = oracle::random_problem(gen, 3, 5);
    const AugmentedSvd s = augmented_svd(A, b);
    for (Index k = 1; k < s.p(); ++k) {
        const TruncationContext ctx = truncate(s, k);
        const DerivativeKernel g(ctx);
        const Matrix J = oracle::fd_jacobian(A, b, k, 1e-6);
        Matrix K(5, 18);
        for (Index j = 0; j < 18; ++j) {
            K.col(j) = g(unvec(Vector::Unit(18, j), 3, 6));
        }
        EXPECT_LE((K - J).cwiseAbs().maxCoeff(), 1e-5 * (1 + J.cwiseAbs().maxCoeff()));
        EXPECT_LE((K - assemble_mk(ctx).data).cwiseAbs().maxCoeff(), 1e-11 * (1 + K.cwiseAbs().maxCoeff()));
    }
}
