// Command-line front end. Results go to stdout as JSON, except the table
// commands, which print CSV.

#include "ttls/ttls.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

using namespace ttls;
using io::json;

namespace {

struct Inputs {
    std::string A, b, structure;
    Index k = 0;
};

void add_inputs(CLI::App* cmd, Inputs& in)
{
    cmd->add_option("--A", in.A, "matrix file (MatrixMarket or dense text)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--b", in.b, "right-hand side file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--k", in.k, "truncation level")->required()->check(CLI::PositiveNumber);
}

json header()
{
    return {{"schema", kReportSchema}, {"version", kVersion}};
}

json solve_cmd(const Inputs& in)
{
    const Matrix A = io::read_matrix(in.A);
    const Vector b = io::read_vector(in.b);
    const TruncationContext ctx = truncate(augmented_svd(A, b), in.k);
    const TtlsSolution sol = solve_ttls(ctx);
    json j = header();
    j["command"] = "solve";
    j["k"] = in.k;
    j["x"] = io::to_json(sol.xk);
    j["residual_norm"] = io::number(sol.residual_norm);
    j["v22_norm"] = io::number(ctx.v22norm());
    j["sigma"] = io::to_json(ctx.svd().sigma);
    return j;
}

json cond_exact_cmd(const Inputs& in)
{
    const Matrix A = io::read_matrix(in.A);
    const Vector b = io::read_vector(in.b);
    const TruncationContext ctx = truncate(augmented_svd(A, b), in.k);
    const DerivativeKernel kernel(ctx);
    const CondReport r = condition_numbers(ctx, A, b);
    json j = header();
    j["command"] = "cond exact";
    j["k"] = in.k;
    j["x"] = io::to_json(kernel.xk());
    j["kappa_abs"] = io::number(r.kappa_abs);
    j["kappa_rel"] = io::number(r.kappa_rel);
    j["mixed"] = io::number(r.mixed);
    j["compwise"] = io::number(r.compwise);
    if (in.k == A.cols()) {
        try {
            const UntruncatedReport u = untruncated_report(A, b);
            j["untruncated"] = {{"kappa1_rel", io::number(u.kappa1_rel)},
                                {"m1", io::number(u.m1)},
                                {"c1", io::number(u.c1)}};
        } catch (const Error& e) {
            j["untruncated"] = {{"error", e.what()}};
        }
    }
    if (!in.structure.empty()) {
        const LinearStructure s = io::read_structure(in.structure, A.rows(), A.cols());
        const StructuredCondReport sr = structured_cond(kernel, s, structure_coefficients(s, A), b);
        j["structured"] = {{"t", s.t()},
                           {"kappa_s_abs", io::number(sr.kappa_s_abs)},
                           {"kappa_s_rel", io::number(sr.kappa_s_rel)},
                           {"mixed_s", io::number(sr.mixed_s)},
                           {"compwise_s", io::number(sr.compwise_s)}};
    }
    return j;
}

json cond_sce_cmd(const Inputs& in, const SceConfig& cfg, const std::string& mode)
{
    const Matrix A = io::read_matrix(in.A);
    const Vector b = io::read_vector(in.b);
    const TruncationContext ctx = truncate(augmented_svd(A, b), in.k);
    const DerivativeKernel kernel(ctx);
    SceReport r;
    if (mode == "normwise") {
        r = sce_normwise(kernel, cfg);
    } else if (mode == "componentwise") {
        r = sce_componentwise(kernel, A, b, cfg);
    } else {
        const LinearStructure s = in.structure.empty() ? toeplitz_structure(A.rows(), A.cols())
                                                       : io::read_structure(in.structure, A.rows(), A.cols());
        r = sce_structured(kernel, s, structure_coefficients(s, A), b, cfg);
    }
    json j = header();
    j["command"] = "cond sce";
    j["mode"] = std::string(to_string(r.mode));
    j["k"] = in.k;
    j["ell"] = r.ell;
    j["seed"] = r.seed;
    j["exact_wallis"] = cfg.use_exact_wallis;
    j["evaluations"] = r.evaluations;
    j["abs_vector"] = io::to_json(r.abs_vector);
    if (r.kappa_est) {
        j["kappa_est"] = io::number(*r.kappa_est);
    }
    if (r.mixed_est) {
        j["mixed_est"] = io::number(*r.mixed_est);
    }
    if (r.compwise_est) {
        j["compwise_est"] = io::number(*r.compwise_est);
    }
    return j;
}

void emit(const json& j, const std::string& out)
{
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream f(out);
    if (!f) {
        throw Error(Errc::Io, "cannot write " + out);
    }
    f << j.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Truncated total least squares: solutions and condition numbers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // solve
    Inputs solve_in;
    std::string solve_out = "json";
    auto* solve = app.add_subcommand("solve", "compute x_k");
    add_inputs(solve, solve_in);
    solve->add_option("--out", solve_out, "output format")->check(CLI::IsMember({"json", "text"}));

    // cond exact | cond sce
    auto* cond = app.add_subcommand("cond", "condition numbers");
    cond->require_subcommand(1);
    Inputs exact_in;
    auto* exact = cond->add_subcommand("exact", "exact normwise, mixed and componentwise condition numbers");
    add_inputs(exact, exact_in);
    exact->add_option("--structure", exact_in.structure, "structure JSON file")->check(CLI::ExistingFile);

    Inputs sce_in;
    SceConfig sce_cfg;
    std::string sce_mode = "componentwise";
    auto* sce = cond->add_subcommand("sce", "small-sample statistical estimates");
    add_inputs(sce, sce_in);
    sce->add_option("--ell", sce_cfg.ell, "number of samples")->required()->check(CLI::PositiveNumber);
    sce->add_option("--seed", sce_cfg.seed, "random seed")->required();
    sce->add_option("--mode", sce_mode)->check(CLI::IsMember({"normwise", "componentwise", "structured"}));
    sce->add_option("--structure", sce_in.structure, "structure JSON file (default Toeplitz)")
        ->check(CLI::ExistingFile);
    sce->add_flag("--exact-wallis", sce_cfg.use_exact_wallis, "use the exact Wallis factors");

    // experiment table1 | table2 | ratios
    auto* exp = app.add_subcommand("experiment", "reference tables and ratio experiments");
    exp->require_subcommand(1);
    std::string table_out;
    SceConfig table_cfg;
    std::vector<Index> table2_sizes;
    auto* t1 = exp->add_subcommand("table1", "small badly scaled example");
    auto* t2 = exp->add_subcommand("table2", "Toeplitz example");
    for (auto* t : {t1, t2}) {
        t->add_option("--out", table_out, "directory for tableN.csv and tableN.json");
        t->add_option("--ell", table_cfg.ell, "samples for the estimate columns");
        t->add_option("--seed", table_cfg.seed, "seed for the estimate columns");
    }
    t2->add_option("--sizes", table2_sizes, "subset of m in {100,200,300,400,500}");

    std::string spec_path, ratio_out;
    std::size_t trials = 100;
    double eps = 1e-8;
    SceConfig ratio_cfg;
    bool structured = false;
    auto* ratios = exp->add_subcommand("ratios", "over-estimation ratios under random perturbations");
    ratios->add_option("--spec", spec_path, "problem spec JSON")->required()->check(CLI::ExistingFile);
    ratios->add_option("--trials", trials)->required()->check(CLI::PositiveNumber);
    ratios->add_option("--eps", eps)->required()->check(CLI::PositiveNumber);
    ratios->add_option("--ell", ratio_cfg.ell)->required()->check(CLI::PositiveNumber);
    ratios->add_option("--seed", ratio_cfg.seed)->required();
    ratios->add_flag("--structured", structured, "Toeplitz perturbations and the structured estimator");
    ratios->add_option("--out", ratio_out, "write the JSON report here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) {
            if (solve_out == "text") {
                const Matrix A = io::read_matrix(solve_in.A);
                const Vector b = io::read_vector(solve_in.b);
                std::cout.precision(17);
                std::cout << solve_ttls(A, b, solve_in.k).xk << '\n';
            } else {
                emit(solve_cmd(solve_in), "");
            }
        } else if (*exact) {
            emit(cond_exact_cmd(exact_in), "");
        } else if (*sce) {
            emit(cond_sce_cmd(sce_in, sce_cfg, sce_mode), "");
        } else if (*t1 || *t2) {
            const TableReport rep = *t1 ? run_table1(table_cfg) : run_table2(table_cfg, table2_sizes);
            if (!table_out.empty()) {
                write_table(rep, table_out);
            }
            std::cout << to_csv(rep);
            if (!rep.exact_pass()) {
                std::cerr << "exact values outside the " << kTableRelTol * 100 << "% tolerance:\n";
                for (const auto& c : rep.cells) {
                    if (c.exact && !c.pass) {
                        std::cerr << "  " << c.row << ' ' << c.quantity << ": computed " << c.computed
                                  << ", reference " << *c.reference << '\n';
                    }
                }
                return 1;
            }
        } else if (*ratios) {
            json spec_json;
            try {
                std::ifstream f(spec_path);
                spec_json = json::parse(f);
            } catch (const json::exception& e) {
                throw Error(Errc::Parse, spec_path + ": " + e.what());
            }
            const ProblemSpec spec = problem_spec_from_json(spec_json);
            const Problem prob = build_problem(spec);
            PerturbationModel model;
            model.kind = structured ? PerturbationModel::Kind::StructuredToeplitz
                                    : PerturbationModel::Kind::Componentwise;
            model.eps = eps;
            model.seed = ratio_cfg.seed;
            const RatioReport r = overestimation_ratios(prob, model, trials, ratio_cfg);
            json j = header();
            j["command"] = "experiment ratios";
            j["spec"] = to_json(spec);
            j["trials"] = trials;
            j["eps"] = eps;
            j["ell"] = ratio_cfg.ell;
            j["seed"] = ratio_cfg.seed;
            j["report"] = to_json(r);
            emit(j, ratio_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
