// SPDX-License-Identifier: Apache-2.0
#include "cbdi/cbdi_sim.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cbdi {

double feller_step_exact(double b, double c, double y, double h, RngStream& rng) {
    if (!(c >= 0.0)) throw std::domain_error("diffusion coefficient must be >= 0");
    if (!(y >= 0.0)) throw std::domain_error("state must be >= 0");
    if (!(h > 0.0)) throw std::domain_error("step size must be > 0");
    const double p_h = std::exp(-b * h);
    if (c == 0.0) return y * p_h;
    if (y == 0.0) return 0.0;
    // -expm1(-b h)/b is h at b == 0 and stays accurate for small |b h|.
    const double theta_h = b == 0.0 ? c * h : c * (-std::expm1(-b * h)) / b;
    const auto n = rng.poisson(y * p_h / theta_h);
    if (n == 0) return 0.0;
    return rng.gamma(static_cast<double>(n), theta_h);
}

double sde_step(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                double y, double h, RngStream& rng, SdeStepStats* stats) {
    if (!(y >= 0.0)) throw std::domain_error("state must be >= 0");
    const double y_in = y;

    // Drift: immigration drift beta plus the compensator of the branching
    // jumps (the -bY part belongs to the exact diffusion transition below).
    double jump_rate_mass = 0.0;
    for (const auto& a : mech.m.atoms()) jump_rate_mass += a.site * a.weight;
    double drifted = y_in + h * (imm.beta(y_in) - y_in * jump_rate_mass);
    if (drifted < 0.0) {
        drifted = 0.0;
        if (stats) ++stats->floored;
    }
    y = drifted;

    // Branching jumps, intensity y_in * m_j each.
    for (const auto& a : mech.m.atoms()) {
        if (a.weight == 0.0) continue;
        const auto n = rng.poisson(y_in * a.weight * h);
        y += static_cast<double>(n) * a.site;
    }
    // Immigration jumps, intensity q_j(y_in) * pi_j each.
    for (const auto& a : imm.atoms) {
        const double rate = a.q(y_in) * a.pi;
        if (rate == 0.0) continue;
        const auto n = rng.poisson(rate * h);
        y += static_cast<double>(n) * a.z;
    }
    return feller_step_exact(mech.b, mech.c, y, h, rng);
}

namespace {

struct SdePlan {
    std::vector<std::uint64_t> record_at;
    std::uint64_t n_steps = 0;
    Ensemble ens;
};

SdePlan plan_sde(const ImmigrationMechanism&, double y0, std::span<const double> t_grid,
                 double dt, std::int64_t n_paths, std::uint64_t master_seed) {
    if (!(y0 >= 0.0)) throw std::invalid_argument("y0 must be >= 0");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    if (n_paths < 1) throw std::invalid_argument("need at least one path");
    if (t_grid.empty()) throw std::invalid_argument("time grid must be nonempty");

    SdePlan plan;
    plan.record_at.reserve(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        if (!(t >= 0.0)) throw std::invalid_argument("time grid entries must be >= 0");
        if (i > 0 && t < t_grid[i - 1])
            throw std::invalid_argument("time grid must be nondecreasing");
        const double steps = t / dt;
        const double rounded = std::round(steps);
        if (std::fabs(steps - rounded) > 1e-9 * std::max(1.0, steps))
            throw std::invalid_argument(
                "time grid entries must be integer multiples of dt");
        plan.record_at.push_back(static_cast<std::uint64_t>(rounded));
    }
    plan.n_steps = plan.record_at.back();
    plan.ens.meta.kind = "sde";
    plan.ens.meta.dt = dt;
    plan.ens.meta.y0 = y0;
    plan.ens.meta.t_grid.assign(t_grid.begin(), t_grid.end());
    plan.ens.meta.n_paths = n_paths;
    plan.ens.meta.seed = master_seed;
    plan.ens.samples.assign(t_grid.size(),
                            std::vector<double>(static_cast<std::size_t>(n_paths)));
    return plan;
}

void run_sde_path(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                  const SdePlan& plan, double y0, double dt, std::uint64_t key,
                  std::int64_t path, Ensemble& ens, SdeStepStats& stats) {
    double y = y0;
    std::size_t ri = 0;
    auto record_here = [&](std::uint64_t s) {
        while (ri < plan.record_at.size() && plan.record_at[ri] == s) {
            ens.samples[ri][static_cast<std::size_t>(path)] = y;
            ++ri;
        }
    };
    record_here(0);
    for (std::uint64_t s = 0; s < plan.n_steps; ++s) {
        RngStream rng(key, static_cast<std::uint64_t>(path), s);
        y = sde_step(mech, imm, y, dt, rng, &stats);
        record_here(s + 1);
    }
}

}  // namespace

Ensemble sde_marginals_serial(const BranchingMechanism& mech,
                              const ImmigrationMechanism& imm, double y0,
                              std::span<const double> t_grid, double dt,
                              std::int64_t n_paths, std::uint64_t master_seed,
                              SdeStepStats* stats) {
    SdePlan plan = plan_sde(imm, y0, t_grid, dt, n_paths, master_seed);
    const std::uint64_t key = derive_stream_key(master_seed, stream_domain::sde());
    SdeStepStats local{};
    for (std::int64_t p = 0; p < n_paths; ++p)
        run_sde_path(mech, imm, plan, y0, dt, key, p, plan.ens, local);
    if (stats) stats->floored += local.floored;
    return std::move(plan.ens);
}

Ensemble sde_marginals(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                       double y0, std::span<const double> t_grid, double dt,
                       std::int64_t n_paths, std::uint64_t master_seed, int workers,
                       SdeStepStats* stats) {
#ifndef _OPENMP
    (void)workers;
    return sde_marginals_serial(mech, imm, y0, t_grid, dt, n_paths, master_seed, stats);
#else
    SdePlan plan = plan_sde(imm, y0, t_grid, dt, n_paths, master_seed);
    const std::uint64_t key = derive_stream_key(master_seed, stream_domain::sde());
    const int nthreads = workers > 0 ? workers : omp_get_max_threads();
    std::atomic<bool> failed{false};
    std::exception_ptr eptr;
    std::mutex eptr_mutex;
    std::atomic<std::uint64_t> floored{0};
#pragma omp parallel for schedule(dynamic, 16) num_threads(nthreads)
    for (std::int64_t p = 0; p < n_paths; ++p) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            SdeStepStats local{};
            run_sde_path(mech, imm, plan, y0, dt, key, p, plan.ens, local);
            floored.fetch_add(local.floored, std::memory_order_relaxed);
        } catch (...) {
            std::lock_guard<std::mutex> lock(eptr_mutex);
            if (!eptr) eptr = std::current_exception();
            failed.store(true, std::memory_order_relaxed);
        }
    }
    if (eptr) std::rethrow_exception(eptr);
    if (stats) stats->floored += floored.load();
    return std::move(plan.ens);
#endif
}

}  // namespace cbdi
