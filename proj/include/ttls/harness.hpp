#pragma once

// Test problems, perturbation models, over-estimation ratio experiments
// and the two table reproductions.

#include "ttls/condition.hpp"
#include "ttls/io.hpp"
#include "ttls/rng.hpp"
#include "ttls/sce.hpp"
#include "ttls/structure.hpp"
#include "ttls/version.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace ttls {

// ---------------------------------------------------------------------------
// Generators

struct Problem {
    Matrix A;
    Vector b;
    Index k = 0;
    std::optional<LinearStructure> structure; ///< raw Toeplitz basis when A is Toeplitz by construction
    Vector a;                                 ///< coefficients for `structure`
};

/// A = [[2,0],[0,3],[0,10^-s]], b = [10^-s, 0, 1]^T.
inline std::pair<Matrix, Vector> gen_example1(double s)
{
    detail::require(s >= 0.0 && std::isfinite(s), Errc::InvalidArgument, "example 1 needs s >= 0");
    const double e = std::pow(10.0, -s);
    Matrix A(3, 2);
    A << 2, 0, 0, 3, 0, e;
    Vector b(3);
    b << e, 0, 1;
    return {A, b};
}

/// m x (m-2) Toeplitz A with m-1 on the main diagonal and -1 elsewhere;
/// b = -1 except b(m-2) = m-1 (0-based). Only k = m-2 is admissible.
inline Problem gen_example2(Index m)
{
    detail::require(m >= 4, Errc::InvalidArgument, "example 2 needs m >= 4");
    const Index n = m - 2;
    Problem out;
    out.A = Matrix::Constant(m, n, -1.0);
    out.A.diagonal().setConstant(static_cast<double>(m - 1));
    out.b = Vector::Constant(m, -1.0);
    out.b(m - 2) = static_cast<double>(m - 1);
    out.k = n;
    out.structure = toeplitz_structure(m, n);
    out.a = toeplitz_coefficients(out.A);
    return out;
}

namespace detail {

/// Q from the QR of a Gaussian matrix with R's diagonal made positive.
inline Matrix haar_orthogonal(Rng& rng, Index n)
{
    const Matrix G = rng.normal_matrix(n, n);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < n; ++i) {
        if (std::abs(R(i, i)) < 1e-12) {
            throw Error(Errc::DegenerateDraw, "Gaussian draw is numerically singular");
        }
        if (R(i, i) < 0) {
            Q.col(i) *= -1.0;
        }
    }
    return Q;
}

} // namespace detail

/// [A b] = U Sigma V^T with Haar U, singular values equally spaced in
/// [1e-2, 1], and V arranged so that ||V22||_2 = beta at level k.
inline std::pair<Matrix, Vector> gen_example3(Index m, Index n, Index k, double beta, std::uint64_t seed)
{
    detail::require(m >= 1 && n >= 1 && k >= 1 && k <= std::min(m, n), Errc::InvalidArgument,
                    "example 3 needs 1 <= k <= min(m, n)");
    detail::require(beta > 0.0 && beta < 1.0, Errc::InvalidArgument, "example 3 needs 0 < beta < 1");
    const Index p = std::min(m, n + 1), r = n + 1 - k;

    for (std::uint64_t attempt = 0;; ++attempt) {
        try {
            Rng rng(seed, attempt);
            const Matrix U = detail::haar_orthogonal(rng, m);

            Vector c = rng.normal_matrix(k, 1);
            Vector d = rng.normal_matrix(r, 1);
            c.normalize();
            d.normalize();
            Matrix B(n + 1, n + 1);
            B.col(0) << std::sqrt(1.0 - beta * beta) * c, beta * d;
            B.rightCols(n) = rng.normal_matrix(n + 1, n);
            Eigen::HouseholderQR<Matrix> qr(B);
            const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
            if (R.diagonal().cwiseAbs().minCoeff() < 1e-12) {
                throw Error(Errc::DegenerateDraw, "block matrix is numerically singular");
            }
            const Matrix Q = qr.householderQ() * Matrix::Identity(n + 1, n + 1);
            // V = Q^T with its first and last rows exchanged: the last row of V
            // is then Q's first column, which splits as [sqrt(1-beta^2) c; beta d].
            Matrix V = Q.transpose();
            V.row(0).swap(V.row(n));

            Vector sigma(p);
            for (Index i = 0; i < p; ++i) {
                sigma(i) = p == 1 ? 1.0 : 1.0 - (1.0 - 1e-2) * static_cast<double>(i) / static_cast<double>(p - 1);
            }
            const Matrix H = U.leftCols(p) * sigma.asDiagonal() * V.leftCols(p).transpose();
            return {H.leftCols(n), H.col(n)};
        } catch (const Error& e) {
            if (e.code() != Errc::DegenerateDraw || attempt >= 2) {
                throw;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Problem specs

struct ProblemSpec {
    enum class Kind { Example1, Example2, Example3, File };

    Kind kind = Kind::Example1;
    double s = 3.0;
    Index m = 0;
    Index n = 0;
    Index k = 0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::string path_A;
    std::string path_b;
};

inline ProblemSpec problem_spec_from_json(const io::json& j)
{
    try {
        ProblemSpec spec;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "example1") {
            spec.kind = ProblemSpec::Kind::Example1;
            spec.s = j.at("s").get<double>();
            spec.k = j.at("k").get<Index>();
        } else if (kind == "example2") {
            spec.kind = ProblemSpec::Kind::Example2;
            spec.m = j.at("m").get<Index>();
            spec.k = j.value("k", spec.m - 2);
        } else if (kind == "example3") {
            spec.kind = ProblemSpec::Kind::Example3;
            spec.m = j.at("m").get<Index>();
            spec.n = j.at("n").get<Index>();
            spec.k = j.at("k").get<Index>();
            spec.beta = j.at("beta").get<double>();
            spec.seed = j.value("seed", std::uint64_t{0});
        } else if (kind == "file") {
            spec.kind = ProblemSpec::Kind::File;
            spec.path_A = j.at("A").get<std::string>();
            spec.path_b = j.at("b").get<std::string>();
            spec.k = j.at("k").get<Index>();
        } else {
            throw Error(Errc::Parse, "problem spec: unknown kind '" + kind + "'");
        }
        return spec;
    } catch (const io::json::exception& e) {
        throw Error(Errc::Parse, std::string("problem spec: ") + e.what());
    }
}

inline io::json to_json(const ProblemSpec& spec)
{
    switch (spec.kind) {
    case ProblemSpec::Kind::Example1: return {{"kind", "example1"}, {"s", spec.s}, {"k", spec.k}};
    case ProblemSpec::Kind::Example2: return {{"kind", "example2"}, {"m", spec.m}, {"k", spec.k}};
    case ProblemSpec::Kind::Example3:
        return {{"kind", "example3"}, {"m", spec.m}, {"n", spec.n}, {"k", spec.k},
                {"beta", spec.beta}, {"seed", spec.seed}};
    case ProblemSpec::Kind::File: return {{"kind", "file"}, {"A", spec.path_A}, {"b", spec.path_b}, {"k", spec.k}};
    }
    return {};
}

inline Problem build_problem(const ProblemSpec& spec)
{
    Problem out;
    switch (spec.kind) {
    case ProblemSpec::Kind::Example1:
        std::tie(out.A, out.b) = gen_example1(spec.s);
        break;
    case ProblemSpec::Kind::Example2:
        out = gen_example2(spec.m);
        break;
    case ProblemSpec::Kind::Example3:
        std::tie(out.A, out.b) = gen_example3(spec.m, spec.n, spec.k, spec.beta, spec.seed);
        break;
    case ProblemSpec::Kind::File:
        out.A = io::read_matrix(spec.path_A);
        out.b = io::read_vector(spec.path_b);
        break;
    }
    out.k = spec.k;
    if (!out.structure && is_toeplitz(out.A)) {
        out.structure = toeplitz_structure(out.A.rows(), out.A.cols());
        out.a = toeplitz_coefficients(out.A);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Perturbations

struct PerturbationModel {
    enum class Kind { Componentwise, StructuredToeplitz };

    Kind kind = Kind::Componentwise;
    double eps = 1e-8;
    std::uint64_t seed = 0;
};

struct Perturbation {
    Matrix dA;
    Vector db;
    Vector da; ///< Toeplitz coefficients of dA, structured model only
};

/// dA = eps (E .* A), db = eps (f .* b) with E, f uniform on (-1, 1). In the
/// structured model E is itself a random Toeplitz matrix.
inline Perturbation perturb(const Matrix& A, const Vector& b, const PerturbationModel& model, std::uint64_t trial)
{
    detail::require(model.eps > 0.0, Errc::InvalidArgument, "perturbation needs eps > 0");
    Rng rng(model.seed, trial);
    const Index m = A.rows(), n = A.cols();
    Perturbation out;
    if (model.kind == PerturbationModel::Kind::Componentwise) {
        out.dA = model.eps * rng.uniform_matrix(m, n, -1.0, 1.0).cwiseProduct(A);
    } else {
        const Vector e = rng.uniform_matrix(m + n - 1, 1, -1.0, 1.0);
        out.dA = model.eps * materialize(toeplitz_structure(m, n), e).cwiseProduct(A);
        if (is_toeplitz(A)) {
            out.da = toeplitz_coefficients(out.dA);
        }
    }
    out.db = model.eps * rng.uniform_matrix(m, 1, -1.0, 1.0).cwiseProduct(b);
    return out;
}

// ---------------------------------------------------------------------------
// Over-estimation ratios

struct RatioSummary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double fraction_in = 0.0; ///< fraction of samples in (0.1, 10)
};

inline RatioSummary summarize(const std::vector<double>& r)
{
    RatioSummary s;
    if (r.empty()) {
        return s;
    }
    s.min = r.front();
    s.max = r.front();
    std::size_t inside = 0;
    double sum = 0.0;
    for (double v : r) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        inside += (v > 0.1 && v < 10.0) ? 1 : 0;
    }
    s.mean = sum / static_cast<double>(r.size());
    s.fraction_in = static_cast<double>(inside) / static_cast<double>(r.size());
    return s;
}

struct RatioReport {
    std::size_t samples = 0;
    std::size_t skipped = 0;
    std::vector<double> r_kappa, r_m, r_c;
    RatioSummary kappa, mixed, compwise;
    std::string mode; ///< "unstructured" or "structured"
    std::vector<std::string> skip_reasons;
};

/// Per trial: perturb, re-solve through the full SVD pipeline, run the
/// estimators with a fresh seed, and divide estimate * eps by the observed
/// relative error. x_k = -V12 V22^T / ||V22||^2 is unchanged when columns of
/// V flip sign, so the perturbed solution needs no sign alignment.
inline RatioReport overestimation_ratios(const Problem& prob, const PerturbationModel& model, std::size_t trials,
                                         const SceConfig& cfg, const Tolerances& tol = {})
{
    detail::require(trials >= 1, Errc::InvalidArgument, "ratio experiment needs trials >= 1");
    const bool structured = model.kind == PerturbationModel::Kind::StructuredToeplitz;
    if (structured) {
        detail::require(prob.structure.has_value() && is_toeplitz(prob.A), Errc::InvalidArgument,
                        "structured perturbations need a Toeplitz A");
    }
    auto svd = std::make_shared<const AugmentedSvd>(augmented_svd(prob.A, prob.b));
    const TruncationContext ctx = truncate(svd, prob.k, tol);
    const DerivativeKernel kernel(ctx);
    const Vector& x = kernel.xk();

    RatioReport out;
    out.mode = structured ? "structured" : "unstructured";
    for (std::size_t i = 0; i < trials; ++i) {
        try {
            const Perturbation d = perturb(prob.A, prob.b, model, i);
            const Vector xt = solve_ttls(prob.A + d.dA, prob.b + d.db, prob.k, tol).xk;
            const Vector dx = xt - x;
            const double e2 = dx.norm() / x.norm();
            const double einf = dx.lpNorm<Eigen::Infinity>() / x.lpNorm<Eigen::Infinity>();
            const double ec = componentwise_inf_ratio(dx, x);
            if (e2 == 0.0 || einf == 0.0 || ec == 0.0) {
                throw Error(Errc::ComputationFailed, "perturbed solution identical to x_k");
            }

            SceConfig c = cfg;
            c.seed = splitmix64(cfg.seed ^ splitmix64(i));
            double kappa_est = 0.0, m_est = 0.0, c_est = 0.0;
            if (structured) {
                const SceReport rep = sce_structured(kernel, *prob.structure, prob.a, prob.b, c);
                kappa_est = *rep.kappa_est;
                m_est = *rep.mixed_est;
                c_est = *rep.compwise_est;
            } else {
                kappa_est = *sce_normwise(kernel, c).kappa_est;
                const SceReport rep = sce_componentwise(kernel, prob.A, prob.b, c);
                m_est = *rep.mixed_est;
                c_est = *rep.compwise_est;
            }
            out.r_kappa.push_back(kappa_est * model.eps / e2);
            out.r_m.push_back(m_est * model.eps / einf);
            out.r_c.push_back(c_est * model.eps / ec);
            ++out.samples;
        } catch (const Error& e) {
            ++out.skipped;
            out.skip_reasons.push_back("trial " + std::to_string(i) + ": " + e.what());
        }
    }
    out.kappa = summarize(out.r_kappa);
    out.mixed = summarize(out.r_m);
    out.compwise = summarize(out.r_c);
    return out;
}

inline io::json to_json(const RatioSummary& s)
{
    return {{"mean", io::number(s.mean)}, {"min", io::number(s.min)}, {"max", io::number(s.max)},
            {"fraction_in_0.1_10", s.fraction_in}};
}

inline io::json to_json(const RatioReport& r)
{
    auto vecj = [](const std::vector<double>& v) {
        io::json a = io::json::array();
        for (double x : v) {
            a.push_back(io::number(x));
        }
        return a;
    };
    return {{"mode", r.mode},
            {"samples", r.samples},
            {"skipped", r.skipped},
            {"skip_reasons", r.skip_reasons},
            {"summary", {{"r_kappa", to_json(r.kappa)}, {"r_m", to_json(r.mixed)}, {"r_c", to_json(r.compwise)}}},
            {"r_kappa", vecj(r.r_kappa)},
            {"r_m", vecj(r.r_m)},
            {"r_c", vecj(r.r_c)}};
}

// ---------------------------------------------------------------------------
// Tables

/// Reference values. Example 1 columns: kappa_rel, m, c (the untruncated
/// columns coincide at k = 2 and are absent at k = 1).
struct Table1Reference {
    double s;
    Index k;
    double kappa_rel, m, c;
    double kappa_sce, m_sce, c_sce; ///< one random run each, informational
};

inline constexpr Table1Reference kTable1[] = {
    {3, 1, 1.18e4, 4.50, 16.20, 1.15e4, 2.70, 11.65},   {3, 2, 4.11e3, 3.33, 4.50, 5.46e3, 1.40, 2.19},
    {6, 1, 1.18e7, 4.50, 16.05, 1.51e7, 3.02, 10.16},   {6, 2, 4.11e6, 3.33, 4.50, 5.67e6, 2.35, 2.35},
    {9, 1, 1.18e10, 4.50, 4.50, 1.42e10, 2.31, 2.31},   {9, 2, 4.11e9, 3.33, 4.50, 2.98e9, 2.43, 3.69},
    {12, 1, 1.18e13, 4.50, 4.50, 1.61e13, 3.37, 3.37},  {12, 2, 4.11e12, 3.33, 4.50, 3.83e12, 1.20, 3.17},
};

struct Table2Reference {
    Index m;
    double kappa_rel, kappa_s_rel, kappa_sce, mixed, mixed_s, m_sce, compwise, compwise_s, c_sce;
};

inline constexpr Table2Reference kTable2[] = {
    {100, 8.98e2, 9.24e1, 7.37e3, 2.49, 2.49, 2.84, 2.49, 2.49, 2.84},
    {200, 1.80e3, 1.31e2, 1.93e4, 2.50, 2.50, 2.27, 2.50, 2.50, 2.27},
    {300, 2.71e3, 1.60e2, 3.80e4, 2.50, 2.50, 2.21, 2.50, 2.50, 2.21},
    {400, 3.61e3, 1.85e2, 5.82e4, 2.50, 2.50, 2.19, 2.50, 2.50, 2.19},
    {500, 4.52e3, 2.06e2, 8.05e4, 2.50, 2.50, 2.14, 2.50, 2.50, 2.14},
};

inline constexpr double kTableRelTol = 0.01;

struct TableCell {
    std::string row; ///< e.g. "s=3,k=1" or "m=100"
    std::string quantity;
    double computed = 0.0;
    std::optional<double> reference;
    bool exact = true; ///< exact values gate the exit code; SCE cells only need factor-10 reliability
    bool pass = true;
};

struct TableReport {
    int table = 0;
    std::vector<TableCell> cells;
    double seconds = 0.0; ///< wall time, kept out of the JSON so reruns compare equal
    SceConfig sce;

    [[nodiscard]] bool exact_pass() const
    {
        for (const auto& c : cells) {
            if (c.exact && !c.pass) {
                return false;
            }
        }
        return true;
    }
};

namespace detail {

inline double relative_error(double computed, double reference)
{
    return std::abs(computed - reference) / std::abs(reference);
}

inline void add_exact(TableReport& rep, const std::string& row, const std::string& q, double v,
                      std::optional<double> ref)
{
    TableCell c{row, q, v, ref, true, true};
    if (ref) {
        c.pass = relative_error(v, *ref) <= kTableRelTol;
    }
    rep.cells.push_back(std::move(c));
}

inline void add_estimate(TableReport& rep, const std::string& row, const std::string& q, double est, double exact)
{
    TableCell c{row, q, est, exact, false, est >= exact / 10.0 && est <= exact * 10.0};
    rep.cells.push_back(std::move(c));
}

} // namespace detail

/// Example 1, s in {3,6,9,12}, k in {1,2}.
inline TableReport run_table1(const SceConfig& cfg = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    TableReport rep;
    rep.table = 1;
    rep.sce = cfg;
    for (const auto& ref : kTable1) {
        const auto [A, b] = gen_example1(ref.s);
        auto svd = std::make_shared<const AugmentedSvd>(augmented_svd(A, b));
        const TruncationContext ctx = truncate(svd, ref.k);
        const DerivativeKernel kernel(ctx);
        const CondReport cr = condition_numbers(ctx, A, b);
        std::ostringstream row;
        row << "s=" << ref.s << ",k=" << ref.k;
        detail::add_exact(rep, row.str(), "kappa_rel", cr.kappa_rel, ref.kappa_rel);
        detail::add_exact(rep, row.str(), "m", cr.mixed, ref.m);
        detail::add_exact(rep, row.str(), "c", cr.compwise, ref.c);
        if (ref.k == A.cols()) {
            const UntruncatedReport ur = untruncated_report(A, b);
            detail::add_exact(rep, row.str(), "kappa1_rel", ur.kappa1_rel, ref.kappa_rel);
            detail::add_exact(rep, row.str(), "m1", ur.m1, ref.m);
            detail::add_exact(rep, row.str(), "c1", ur.c1, ref.c);
        }
        const SceReport nw = sce_normwise(kernel, cfg);
        const SceReport cw = sce_componentwise(kernel, A, b, cfg);
        detail::add_estimate(rep, row.str(), "kappa_sce", *nw.kappa_est, cr.kappa_rel);
        detail::add_estimate(rep, row.str(), "m_sce", *cw.mixed_est, cr.mixed);
        detail::add_estimate(rep, row.str(), "c_sce", *cw.compwise_est, cr.compwise);
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Example 2, m in {100,...,500}, k = m-2, raw 0/1 Toeplitz basis.
inline TableReport run_table2(const SceConfig& cfg = {}, const std::vector<Index>& sizes = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    TableReport rep;
    rep.table = 2;
    rep.sce = cfg;
    for (const auto& ref : kTable2) {
        if (!sizes.empty() && std::find(sizes.begin(), sizes.end(), ref.m) == sizes.end()) {
            continue;
        }
        const Problem prob = gen_example2(ref.m);
        auto svd = std::make_shared<const AugmentedSvd>(augmented_svd(prob.A, prob.b));
        const TruncationContext ctx = truncate(svd, prob.k);
        const DerivativeKernel kernel(ctx);
        const CondReport cr = condition_numbers(ctx, prob.A, prob.b);
        const StructuredCondReport sr = structured_cond(kernel, *prob.structure, prob.a, prob.b);
        const std::string row = "m=" + std::to_string(ref.m);
        detail::add_exact(rep, row, "kappa_rel", cr.kappa_rel, ref.kappa_rel);
        detail::add_exact(rep, row, "kappa_s_rel", sr.kappa_s_rel, ref.kappa_s_rel);
        detail::add_exact(rep, row, "m", cr.mixed, ref.mixed);
        detail::add_exact(rep, row, "m_s", sr.mixed_s, ref.mixed_s);
        detail::add_exact(rep, row, "c", cr.compwise, ref.compwise);
        detail::add_exact(rep, row, "c_s", sr.compwise_s, ref.compwise_s);
        const SceReport st = sce_structured(kernel, *prob.structure, prob.a, prob.b, cfg);
        detail::add_estimate(rep, row, "kappa_sce", *st.kappa_est, sr.kappa_s_rel);
        detail::add_estimate(rep, row, "m_sce", *st.mixed_est, sr.mixed_s);
        detail::add_estimate(rep, row, "c_sce", *st.compwise_est, sr.compwise_s);
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

inline std::string to_csv(const TableReport& rep)
{
    std::ostringstream out;
    out << std::setprecision(6);
    out << "row,quantity,computed,reference,rel_err,kind,pass\n";
    for (const auto& c : rep.cells) {
        out << '"' << c.row << "\"," << c.quantity << ',' << c.computed << ',';
        if (c.reference) {
            out << *c.reference << ',' << detail::relative_error(c.computed, *c.reference);
        } else {
            out << ',';
        }
        out << ',' << (c.exact ? "exact" : "sce") << ',' << (c.pass ? "yes" : "no") << '\n';
    }
    return out.str();
}

inline io::json to_json(const TableReport& rep)
{
    io::json cells = io::json::array();
    for (const auto& c : rep.cells) {
        io::json j = {{"row", c.row}, {"quantity", c.quantity}, {"computed", io::number(c.computed)},
                      {"kind", c.exact ? "exact" : "sce"}, {"pass", c.pass}};
        if (c.reference) {
            j["reference"] = *c.reference;
            j["rel_err"] = io::number(detail::relative_error(c.computed, *c.reference));
        }
        cells.push_back(std::move(j));
    }
    const Tolerances tol;
    return {{"schema", kReportSchema},
            {"version", kVersion},
            {"table", rep.table},
            {"ell", rep.sce.ell},
            {"seed", rep.sce.seed},
            {"exact_wallis", rep.sce.use_exact_wallis},
            {"tolerances", {{"table_rel", kTableRelTol}, {"gap", tol.gap}, {"generic", tol.generic}}},
            {"exact_pass", rep.exact_pass()},
            {"cells", cells}};
}

/// Writes table<N>.csv and table<N>.json into `dir`.
inline void write_table(const TableReport& rep, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const std::string stem = "table" + std::to_string(rep.table);
    std::ofstream csv(dir / (stem + ".csv"));
    std::ofstream js(dir / (stem + ".json"));
    if (!csv || !js) {
        throw Error(Errc::Io, "cannot write reports into " + dir.string());
    }
    csv << to_csv(rep);
    js << to_json(rep).dump(2) << '\n';
}

} // namespace ttls
