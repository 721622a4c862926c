// SPDX-License-Identifier: Apache-2.0
#include "cbdi/discrete_sim.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cbdi {

std::uint64_t step(const ScaledModel& model, std::uint64_t z, RngStream& rng) {
    thread_local std::vector<PgfComponent> scratch;
    model.control.components_at(z, scratch);
    const std::uint64_t psi = pgf_detail::sample_components(scratch, rng);
    return pgf_detail::iid_sum_components(model.offspring.components(), z + psi, rng);
}

std::vector<std::uint64_t> simulate_generations(const ScaledModel& model,
                                                std::uint64_t z0, std::uint64_t key,
                                                std::uint64_t path,
                                                std::span<const std::uint64_t> record_at) {
    for (std::size_t i = 1; i < record_at.size(); ++i) {
        if (record_at[i] < record_at[i - 1])
            throw std::invalid_argument("record indices must be nondecreasing");
    }
    std::vector<std::uint64_t> out;
    out.reserve(record_at.size());
    std::uint64_t z = z0;
    std::uint64_t gen = 0;
    std::size_t ri = 0;
    auto record_here = [&] {
        while (ri < record_at.size() && record_at[ri] == gen) {
            out.push_back(z);
            ++ri;
        }
    };
    record_here();
    while (ri < record_at.size()) {
        // One stream per (path, generation): reproducible under any schedule.
        RngStream rng(key, path, gen);
        z = step(model, z, rng);
        ++gen;
        record_here();
    }
    return out;
}

namespace {

struct MarginalPlan {
    std::uint64_t z0;
    std::vector<std::uint64_t> record_at;
    Ensemble ens;
};

MarginalPlan plan_marginals(const ScaledModel& model, double y0,
                            std::span<const double> t_grid, std::int64_t n_paths,
                            std::uint64_t master_seed) {
    if (!(y0 >= 0.0)) throw std::invalid_argument("y0 must be >= 0");
    if (n_paths < 1) throw std::invalid_argument("need at least one path");
    if (t_grid.empty()) throw std::invalid_argument("time grid must be nonempty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0))
            throw std::invalid_argument("time grid entries must be >= 0");
        if (i > 0 && t_grid[i] < t_grid[i - 1])
            throw std::invalid_argument("time grid must be nondecreasing");
    }
    const double kd = static_cast<double>(model.k);
    if (kd * y0 >= static_cast<double>(kPopulationCap))
        throw std::overflow_error("initial population exceeds the 2^62 cap");

    MarginalPlan plan;
    plan.z0 = static_cast<std::uint64_t>(std::floor(kd * y0));
    plan.record_at.reserve(t_grid.size());
    for (double t : t_grid)
        plan.record_at.push_back(
            static_cast<std::uint64_t>(std::floor(model.gamma_k * t)));
    plan.ens.meta.kind = "discrete";
    plan.ens.meta.k = model.k;
    plan.ens.meta.gamma_k = model.gamma_k;
    plan.ens.meta.y0 = y0;
    plan.ens.meta.t_grid.assign(t_grid.begin(), t_grid.end());
    plan.ens.meta.n_paths = n_paths;
    plan.ens.meta.seed = master_seed;
    plan.ens.samples.assign(t_grid.size(),
                            std::vector<double>(static_cast<std::size_t>(n_paths)));
    return plan;
}

void run_path(const ScaledModel& model, const MarginalPlan& plan, std::uint64_t key,
              std::int64_t path, Ensemble& ens) {
    const auto states = simulate_generations(model, plan.z0, key,
                                             static_cast<std::uint64_t>(path),
                                             plan.record_at);
    const double kd = static_cast<double>(model.k);
    for (std::size_t ti = 0; ti < states.size(); ++ti)
        ens.samples[ti][static_cast<std::size_t>(path)] =
            static_cast<double>(states[ti]) / kd;
}

}  // namespace

Ensemble rescaled_marginals_serial(const ScaledModel& model, double y0,
                                   std::span<const double> t_grid,
                                   std::int64_t n_paths, std::uint64_t master_seed) {
    MarginalPlan plan = plan_marginals(model, y0, t_grid, n_paths, master_seed);
    const std::uint64_t key =
        derive_stream_key(master_seed, stream_domain::discrete(model.k));
    for (std::int64_t p = 0; p < n_paths; ++p) run_path(model, plan, key, p, plan.ens);
    return std::move(plan.ens);
}

Ensemble rescaled_marginals(const ScaledModel& model, double y0,
                            std::span<const double> t_grid, std::int64_t n_paths,
                            std::uint64_t master_seed, int workers) {
#ifndef _OPENMP
    (void)workers;
    return rescaled_marginals_serial(model, y0, t_grid, n_paths, master_seed);
#else
    MarginalPlan plan = plan_marginals(model, y0, t_grid, n_paths, master_seed);
    const std::uint64_t key =
        derive_stream_key(master_seed, stream_domain::discrete(model.k));
    const int nthreads = workers > 0 ? workers : omp_get_max_threads();
    std::atomic<bool> failed{false};
    std::exception_ptr eptr;
    std::mutex eptr_mutex;
#pragma omp parallel for schedule(dynamic, 4) num_threads(nthreads)
    for (std::int64_t p = 0; p < n_paths; ++p) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            run_path(model, plan, key, p, plan.ens);
        } catch (...) {
            std::lock_guard<std::mutex> lock(eptr_mutex);
            if (!eptr) eptr = std::current_exception();
            failed.store(true, std::memory_order_relaxed);
        }
    }
    if (eptr) std::rethrow_exception(eptr);
    return std::move(plan.ens);
#endif
}

}  // namespace cbdi
