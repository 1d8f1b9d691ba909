// Solve a small badly scaled problem at both truncation levels and compare
// exact condition numbers with three-sample estimates.

#include "ttls/ttls.hpp"

#include <cstdio>

int main()
{
    using namespace ttls;

    const auto [A, b] = gen_example1(3);
    const auto svd = std::make_shared<const AugmentedSvd>(augmented_svd(A, b));
    std::printf("sigma([A b]) = %.6g %.6g %.6g\n", svd->sigma(0), svd->sigma(1), svd->sigma(2));

    for (Index k = 1; k <= 2; ++k) {
        const TruncationContext ctx = truncate(svd, k);
        const DerivativeKernel kernel(ctx);
        const Vector& x = kernel.xk();
        const CondReport exact = condition_numbers(ctx, A, b);

        SceConfig cfg;
        cfg.seed = 1;
        const SceReport nw = sce_normwise(kernel, cfg);
        const SceReport cw = sce_componentwise(kernel, A, b, cfg);

        std::printf("\nk = %td   x_k = [%.6g, %.6g]\n", k, x(0), x(1));
        std::printf("  %-14s %12s %12s\n", "", "exact", "estimate");
        std::printf("  %-14s %12.4g %12.4g\n", "normwise", exact.kappa_rel, *nw.kappa_est);
        std::printf("  %-14s %12.4g %12.4g\n", "mixed", exact.mixed, *cw.mixed_est);
        std::printf("  %-14s %12.4g %12.4g\n", "componentwise", exact.compwise, *cw.compwise_est);
        std::printf("  derivative evaluations: %zu\n", kernel.evaluations());
    }
    return 0;
}
