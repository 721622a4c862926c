// SPDX-License-Identifier: Apache-2.0
#include "cbdi/cli_run.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbdi/cbdi_sim.hpp"
#include "cbdi/config.hpp"
#include "cbdi/construct.hpp"
#include "cbdi/discrete_sim.hpp"
#include "cbdi/io.hpp"
#include "cbdi/verify.hpp"

namespace cbdi {

namespace {

namespace fs = std::filesystem;

struct Ctx {
    ExperimentConfig cfg;
    fs::path out;
    std::uint64_t seed = 0;
    int workers = 0;
    std::optional<std::uint64_t> k_filter;
    bool quiet = false;
};

class StopWatch {
  public:
    double ms() const {
        const auto now = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(now - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void say(const Ctx& ctx, const std::string& msg) {
    if (!ctx.quiet) std::cout << msg << '\n';
}

std::vector<std::uint64_t> selected_ks(const Ctx& ctx) {
    if (!ctx.k_filter) return ctx.cfg.k_list;
    for (auto k : ctx.cfg.k_list) {
        if (k == *ctx.k_filter) return {k};
    }
    throw ConfigError("--k " + std::to_string(*ctx.k_filter) +
                      " is not in scaling.k_list");
}

std::vector<double> lattice_points(std::uint64_t k, std::span<const double> x_grid) {
    std::vector<double> out;
    for (double x : x_grid) {
        const double kx = static_cast<double>(k) * x;
        if (std::fabs(kx - std::round(kx)) <= 1e-9 * std::max(1.0, kx))
            out.push_back(x);
    }
    return out;
}

ScaledModel model_at(const Ctx& ctx, std::uint64_t k) {
    return build_scaled_model(ctx.cfg.branching, ctx.cfg.immigration, k, ctx.cfg.K_hat);
}

std::string flag(bool pass) { return pass ? "1" : "0"; }

int finish(const Ctx& ctx, const std::string& command,
           const std::vector<std::string>& failures) {
    if (failures.empty()) {
        say(ctx, command + ": all assertions pass");
        return 0;
    }
    nlohmann::json j;
    j["command"] = command;
    j["failures"] = failures;
    write_text_file(ctx.out / "failures.json", j.dump(2) + "\n");
    for (const auto& f : failures) std::cerr << command << ": FAIL: " << f << '\n';
    return 1;
}

int cmd_construct(const Ctx& ctx) {
    StopWatch watch;
    std::vector<std::vector<std::string>> rows;
    for (auto k : selected_ks(ctx)) {
        const ScaledModel model = model_at(ctx, k);
        const ConstructionCertificate& c = model.cert;
        rows.push_back({std::to_string(c.k), format_real(c.gamma_k),
                        format_real(c.gamma_min), format_real(c.gamma_tilde),
                        format_real(c.gamma_hat), format_real(c.K_hat),
                        format_real(c.K1), format_real(c.K2)});
        say(ctx, "k=" + std::to_string(k) + " gamma_min=" + format_real(c.gamma_min) +
                     " gamma_k=" + format_real(c.gamma_k));
    }
    const fs::path path = ctx.out / "certificates.csv";
    write_csv(path,
              {"k", "gamma_k", "gamma_min", "gamma_tilde", "gamma_hat", "K_hat", "K1",
               "K2"},
              rows);
    write_report_sidecar(path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);
    say(ctx, "wrote " + path.string());
    return 0;
}

int cmd_sim_discrete(const Ctx& ctx) {
    for (auto k : selected_ks(ctx)) {
        StopWatch watch;
        const ScaledModel model = model_at(ctx, k);
        const Ensemble ens =
            rescaled_marginals(model, ctx.cfg.y0, ctx.cfg.t_grid, ctx.cfg.n_paths,
                               ctx.seed, ctx.workers);
        const fs::path path = ctx.out / ("discrete_k" + std::to_string(k) + ".csv");
        write_ensemble(path, ens, ctx.cfg.fingerprint, watch.ms(), ctx.cfg.warnings);
        say(ctx, "wrote " + path.string());
    }
    return 0;
}

int cmd_sim_sde(const Ctx& ctx) {
    StopWatch watch;
    SdeStepStats stats;
    const Ensemble ens =
        sde_marginals(ctx.cfg.branching, ctx.cfg.immigration, ctx.cfg.y0,
                      ctx.cfg.t_grid, ctx.cfg.dt, ctx.cfg.n_paths, ctx.seed,
                      ctx.workers, &stats);
    const fs::path path = ctx.out / "sde.csv";
    write_ensemble(path, ens, ctx.cfg.fingerprint, watch.ms(), ctx.cfg.warnings);
    say(ctx, "wrote " + path.string() + " (drift floored on " +
                 std::to_string(stats.floored) + " steps)");
    return 0;
}

int cmd_verify_generator(const Ctx& ctx) {
    StopWatch watch;
    std::vector<std::string> failures;
    std::vector<std::vector<std::string>> rows;
    double prev_sup = 0.0;
    bool have_prev = false;
    std::uint64_t prev_k = 0;
    for (auto k : selected_ks(ctx)) {
        const ScaledModel model = model_at(ctx, k);
        const std::vector<double> xs = lattice_points(k, ctx.cfg.x_grid);
        const GapReport report = generator_gap(model, ctx.cfg.lambda_grid, xs);
        for (const auto& r : report.rows) {
            rows.push_back({std::to_string(k), format_real(r.lambda), format_real(r.x),
                            format_real(r.Ak), format_real(r.L), format_real(r.gap),
                            format_real(r.Bk), format_real(r.Ck),
                            format_real(r.weighted_Ck)});
            if (std::fabs(r.gap - std::fabs(r.Ak - r.L)) > 1e-14)
                failures.push_back("gap column inconsistent at k=" + std::to_string(k) +
                                   " lambda=" + format_real(r.lambda) +
                                   " x=" + format_real(r.x));
        }
        say(ctx, "k=" + std::to_string(k) + " sup_gap=" + format_real(report.sup_gap));
        if (have_prev && !(report.sup_gap < prev_sup))
            failures.push_back("sup gap did not decrease from k=" +
                               std::to_string(prev_k) + " to k=" + std::to_string(k));
        prev_sup = report.sup_gap;
        prev_k = k;
        have_prev = true;
    }
    const fs::path path = ctx.out / "gap_report.csv";
    write_csv(path, {"k", "lambda", "x", "Ak", "L", "gap", "Bk", "Ck", "weighted_Ck"},
              rows);
    write_report_sidecar(path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);
    say(ctx, "wrote " + path.string());
    return finish(ctx, "verify-generator", failures);
}

int cmd_verify_conditions(const Ctx& ctx) {
    StopWatch watch;
    const std::vector<std::uint64_t> ks = selected_ks(ctx);
    if (ks.size() < 2)
        throw ConfigError("verify-conditions needs at least two scales in k_list");
    std::vector<ScaledModel> models;
    models.reserve(ks.size());
    for (auto k : ks) models.push_back(model_at(ctx, k));
    const ConditionReport report =
        condition_report(models, ctx.cfg.lambda_grid, ctx.cfg.x_grid);

    std::vector<std::string> failures;
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : report.rows) {
        rows.push_back({std::to_string(r.k), format_real(r.sup_Rk_minus_R),
                        format_real(r.lipschitz_Rk), format_real(r.sup_Fk_minus_F),
                        format_real(r.eq_mean_residual),
                        format_real(r.growth_min_margin),
                        format_real(r.fbound_min_margin)});
        if (r.eq_mean_residual > ctx.cfg.tol.mean_residual)
            failures.push_back("offspring mean identity residual " +
                               format_real(r.eq_mean_residual) + " at k=" +
                               std::to_string(r.k));
        if (r.growth_min_margin < 0.0)
            failures.push_back("control growth margin negative at k=" +
                               std::to_string(r.k));
        if (r.fbound_min_margin < 0.0)
            failures.push_back("immigration kernel bound margin negative at k=" +
                               std::to_string(r.k));
    }
    const fs::path path = ctx.out / "conditions.csv";
    write_csv(path,
              {"k", "sup_Rk_minus_R", "lipschitz_Rk", "sup_Fk_minus_F",
               "eq_mean_residual", "growth_min_margin", "fbound_min_margin"},
              rows);
    write_report_sidecar(path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);
    say(ctx, "wrote " + path.string());
    return finish(ctx, "verify-conditions", failures);
}

int cmd_verify_moments(const Ctx& ctx) {
    StopWatch watch;
    std::vector<std::string> failures;
    std::vector<std::vector<std::string>> rows;
    for (auto k : selected_ks(ctx)) {
        const ScaledModel model = model_at(ctx, k);
        const Ensemble ens =
            rescaled_marginals(model, ctx.cfg.y0, ctx.cfg.t_grid, ctx.cfg.n_paths,
                               ctx.seed, ctx.workers);
        for (const auto& r : moment_bound_check(model, ens)) {
            rows.push_back({std::to_string(k), format_real(r.t),
                            format_real(r.empirical_mean), format_real(r.se),
                            format_real(r.bound), flag(r.pass)});
            if (!r.pass)
                failures.push_back("mean exceeds the bound at k=" + std::to_string(k) +
                                   " t=" + format_real(r.t));
        }
    }
    const fs::path path = ctx.out / "moments.csv";
    write_csv(path, {"k", "t", "empirical_mean", "se", "bound", "pass"}, rows);
    write_report_sidecar(path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);
    say(ctx, "wrote " + path.string());
    return finish(ctx, "verify-moments", failures);
}

int cmd_verify_martingale(const Ctx& ctx) {
    StopWatch watch;
    const std::uint64_t k = ctx.k_filter.value_or(ctx.cfg.k_list.front());
    const ScaledModel model = model_at(ctx, k);
    const double lambda = ctx.cfg.lambda_grid.front();
    if (!(lambda > 0.0))
        throw ConfigError("verify-martingale needs lambda_grid[0] > 0");
    std::set<std::uint64_t> marks;
    for (double t : ctx.cfg.t_grid)
        marks.insert(static_cast<std::uint64_t>(std::floor(model.gamma_k * t)));
    const std::vector<std::uint64_t> checkpoints(marks.begin(), marks.end());

    std::vector<std::string> failures;
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : martingale_residual(model, lambda, ctx.cfg.y0,
                                             ctx.cfg.n_paths, checkpoints, ctx.seed,
                                             ctx.workers)) {
        rows.push_back({std::to_string(r.n), format_real(r.mean), format_real(r.se),
                        flag(r.pass)});
        if (!r.pass)
            failures.push_back("residual mean " + format_real(r.mean) + " exceeds 4 SE (" +
                               format_real(r.se) + ") at n=" + std::to_string(r.n));
    }
    const fs::path path = ctx.out / "martingale.csv";
    write_csv(path, {"n", "mean", "se", "pass"}, rows);
    write_report_sidecar(path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);
    say(ctx, "wrote " + path.string());
    return finish(ctx, "verify-martingale", failures);
}

int cmd_compare(const Ctx& ctx, const std::string& a_path, const std::string& b_path) {
    StopWatch watch;
    const Ensemble a = read_ensemble(a_path);
    const Ensemble b = read_ensemble(b_path);

    std::vector<std::string> failures;
    std::vector<std::vector<std::string>> rows;
    for (const auto& cell :
         laplace_compare(a, b, ctx.cfg.lambda_grid, ctx.cfg.tol.bias_budget)) {
        rows.push_back({format_real(cell.t), format_real(cell.lambda),
                        format_real(cell.lt_a), format_real(cell.lt_b),
                        format_real(cell.diff), format_real(cell.se),
                        flag(cell.pass)});
        if (!cell.pass)
            failures.push_back("transforms disagree at t=" + format_real(cell.t) +
                               " lambda=" + format_real(cell.lambda) + " (diff " +
                               format_real(cell.diff) + ")");
    }
    const fs::path path = ctx.out / "compare.csv";
    write_csv(path, {"t", "lambda", "lt_a", "lt_b", "diff", "se", "pass"}, rows);
    write_report_sidecar(path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);

    const double t_last = a.meta.t_grid.back();
    const KsResult ks = ks_two_sample(a.samples.back(), b.samples.back());
    const bool ks_pass = ks.p >= ctx.cfg.tol.ks_p_min;
    const fs::path ks_path = ctx.out / "compare_ks.csv";
    write_csv(ks_path, {"t", "d", "p", "pass"},
              {{format_real(t_last), format_real(ks.d), format_real(ks.p),
                flag(ks_pass)}});
    write_report_sidecar(ks_path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);
    if (!ks_pass)
        failures.push_back("KS p " + format_real(ks.p) + " below " +
                           format_real(ctx.cfg.tol.ks_p_min) + " at t=" +
                           format_real(t_last));
    say(ctx, "wrote " + path.string() + " and " + ks_path.string());
    return finish(ctx, "compare", failures);
}

int cmd_oracle(const Ctx& ctx) {
    StopWatch watch;
    const BranchingMechanism& mech = ctx.cfg.branching;
    const ImmigrationMechanism& imm = ctx.cfg.immigration;
    std::vector<std::string> problems;
    if (mech.b != 0.0) problems.push_back("branching.b must be 0");
    if (!(mech.c > 0.0)) problems.push_back("branching.c must be positive");
    if (!mech.m.empty()) problems.push_back("branching.m_atoms must be empty");
    if (imm.beta.lipschitz() != 0.0)
        problems.push_back("immigration.beta must be constant");
    if (!imm.atoms.empty()) problems.push_back("immigration.atoms must be empty");
    if (!problems.empty()) {
        std::string msg = "oracle needs the zero-drift constant-immigration model:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    const double beta0 = imm.beta(0.0);

    SdeStepStats stats;
    const Ensemble ens =
        sde_marginals(mech, imm, ctx.cfg.y0, ctx.cfg.t_grid, ctx.cfg.dt,
                      ctx.cfg.n_paths, ctx.seed, ctx.workers, &stats);

    std::vector<std::string> failures;
    std::vector<std::vector<std::string>> rows;
    for (const auto& cell : laplace_vs_oracle(ens, mech.c, beta0, ctx.cfg.lambda_grid,
                                              ctx.cfg.tol.bias_budget)) {
        rows.push_back({format_real(cell.t), format_real(cell.lambda),
                        format_real(cell.lt_a), format_real(cell.lt_b),
                        format_real(cell.diff), format_real(cell.se),
                        flag(cell.pass)});
        if (!cell.pass)
            failures.push_back("empirical transform off the closed form at t=" +
                               format_real(cell.t) + " lambda=" +
                               format_real(cell.lambda) + " (diff " +
                               format_real(cell.diff) + ")");
    }
    const fs::path path = ctx.out / "oracle.csv";
    write_csv(path, {"t", "lambda", "lt_empirical", "lt_oracle", "diff", "se", "pass"},
              rows);
    write_report_sidecar(path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);
    say(ctx, "wrote " + path.string());
    return finish(ctx, "oracle", failures);
}

int cmd_bernstein(const Ctx& ctx) {
    StopWatch watch;
    const BernsteinSection& bs = ctx.cfg.bernstein;
    std::vector<double> grid;
    for (double x = 0.0; x <= bs.x_max + 1e-12; x += bs.x_step) grid.push_back(x);

    std::vector<std::string> failures;
    std::vector<std::vector<std::string>> rows;
    const auto report = bernstein_report(bs.p_coeffs, bs.n_list, grid);
    for (std::size_t i = 0; i < report.size(); ++i) {
        const auto& r = report[i];
        rows.push_back({std::to_string(r.n), format_real(r.err_f),
                        format_real(r.err_df), format_real(r.err_d2f)});
        if (i > 0) {
            const auto& prev = report[i - 1];
            const auto check = [&](double now, double before, const char* name) {
                if (now > 1.1 * before)
                    failures.push_back(std::string(name) + " error grew from n=" +
                                       std::to_string(prev.n) + " to n=" +
                                       std::to_string(r.n));
            };
            check(r.err_f, prev.err_f, "function");
            check(r.err_df, prev.err_df, "first-derivative");
            check(r.err_d2f, prev.err_d2f, "second-derivative");
        }
    }
    const fs::path path = ctx.out / "bernstein.csv";
    write_csv(path, {"n", "err_f", "err_df", "err_d2f"}, rows);
    write_report_sidecar(path, ctx.cfg.fingerprint, ctx.seed, watch.ms(),
                         ctx.cfg.warnings);
    say(ctx, "wrote " + path.string());
    return finish(ctx, "bernstein", failures);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Scaling-limit laboratory for controlled branching processes"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    int workers = 0;
    std::uint64_t k_flag = 0;
    bool k_set = false;
    bool quiet = false;

    app.add_option("--config", config_path, "configuration file (JSON)")->required();
    app.add_option("--out", out_flag, "output directory");
    app.add_option("--seed", seed_flag, "override the configured master seed")
        ->each([&seed_set](const std::string&) { seed_set = true; });
    app.add_option("--workers", workers, "worker threads (0 = library default)");
    app.add_option("--k", k_flag, "restrict to one scale from k_list")
        ->each([&k_set](const std::string&) { k_set = true; });
    app.add_flag("--quiet", quiet, "suppress progress output");

    std::string a_path, b_path;
    CLI::App* c_construct = app.add_subcommand("construct", "build level-k models");
    CLI::App* c_simd = app.add_subcommand("sim-discrete", "simulate the scaled chain");
    CLI::App* c_sims = app.add_subcommand("sim-sde", "simulate the limit process");
    CLI::App* c_gen = app.add_subcommand("verify-generator", "generator gap report");
    CLI::App* c_cond = app.add_subcommand("verify-conditions", "kernel condition report");
    CLI::App* c_mom = app.add_subcommand("verify-moments", "first-moment bound check");
    CLI::App* c_mart = app.add_subcommand("verify-martingale", "martingale residual check");
    CLI::App* c_cmp = app.add_subcommand("compare", "compare two stored ensembles");
    c_cmp->add_option("--a", a_path, "first ensemble CSV")->required();
    c_cmp->add_option("--b", b_path, "second ensemble CSV")->required();
    CLI::App* c_orc = app.add_subcommand("oracle", "check the closed-form transform");
    CLI::App* c_bern = app.add_subcommand("bernstein", "polynomial smoothing report");
    for (CLI::App* sub : {c_construct, c_simd, c_sims, c_gen, c_cond, c_mom, c_mart,
                          c_cmp, c_orc, c_bern})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Ctx ctx;
        ctx.cfg = load_config(config_path);
        ctx.quiet = quiet;
        ctx.workers = workers;
        ctx.seed = seed_set ? seed_flag : ctx.cfg.master_seed;
        if (k_set) ctx.k_filter = k_flag;
        if (!out_flag.empty()) {
            ctx.out = out_flag;
        } else if (const char* env = std::getenv("CBDI_OUT_DIR");
                   env != nullptr && *env != '\0') {
            ctx.out = env;
        } else {
            ctx.out = fs::current_path();
        }
        fs::create_directories(ctx.out);
        for (const auto& w : ctx.cfg.warnings) say(ctx, "warning: " + w);

        if (*c_construct) return cmd_construct(ctx);
        if (*c_simd) return cmd_sim_discrete(ctx);
        if (*c_sims) return cmd_sim_sde(ctx);
        if (*c_gen) return cmd_verify_generator(ctx);
        if (*c_cond) return cmd_verify_conditions(ctx);
        if (*c_mom) return cmd_verify_moments(ctx);
        if (*c_mart) return cmd_verify_martingale(ctx);
        if (*c_cmp) return cmd_compare(ctx, a_path, b_path);
        if (*c_orc) return cmd_oracle(ctx);
        if (*c_bern) return cmd_bernstein(ctx);
        std::cerr << "no command selected\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace cbdi
