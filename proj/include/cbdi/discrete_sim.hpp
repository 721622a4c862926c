// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbdi/construct.hpp"
#include "cbdi/ensemble.hpp"
#include "cbdi/rng.hpp"

namespace cbdi {

// One generation from integer state z: draw psi from the control law at z,
// then the total offspring of z + psi individuals in O(#components) time.
// Throws std::overflow_error past the 2^62 population cap.
std::uint64_t step(const ScaledModel& model, std::uint64_t z, RngStream& rng);

// Runs `n_gens` generations from z0 and records the state after each
// generation index listed in `record_at` (ascending; index g means "after g
// generations", so g = 0 records z0).  Each generation g of path `path`
// consumes the dedicated stream (key, path, g), which makes results
// independent of scheduling.
std::vector<std::uint64_t> simulate_generations(const ScaledModel& model,
                                                std::uint64_t z0, std::uint64_t key,
                                                std::uint64_t path,
                                                std::span<const std::uint64_t> record_at);

// Rescaled marginals Y_k(t) = Z(floor(gamma_k * t)) / k from z0 = floor(k*y0),
// one row per time in t_grid.  `workers` threads run the path loop (0 means
// the OpenMP default); output is identical for every worker count.
Ensemble rescaled_marginals(const ScaledModel& model, double y0,
                            std::span<const double> t_grid, std::int64_t n_paths,
                            std::uint64_t master_seed, int workers = 0);

// Single-threaded reference implementation of the same kernel; kept for
// testing the parallel version against and as a baseline in benchmarks.
Ensemble rescaled_marginals_serial(const ScaledModel& model, double y0,
                                   std::span<const double> t_grid,
                                   std::int64_t n_paths, std::uint64_t master_seed);

}  // namespace cbdi
