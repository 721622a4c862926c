// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "cbdi/ensemble.hpp"
#include "cbdi/mechanism.hpp"
#include "cbdi/rng.hpp"

namespace cbdi {

// Exact transition of the linear branching diffusion
//   dY = sqrt(2 c Y) dB - b Y dt
// over a step of length h, via its compound-Poisson-gamma representation:
//   theta_h = c * (1 - exp(-b h)) / b   (c * h when b == 0),
//   p_h     = exp(-b h),
//   N ~ Poisson(y * p_h / theta_h),  Y_h ~ Gamma(N, theta_h)  (0 when N == 0).
// The transition Laplace transform is exp(-y * p_h*l / (1 + theta_h*l)).
// c == 0 degenerates to the deterministic decay y * exp(-b h).
double feller_step_exact(double b, double c, double y, double h, RngStream& rng);

struct SdeStepStats {
    std::uint64_t floored = 0;  // drift steps clipped at zero
};

// One operator-split step of length h for the full process, with all jump
// intensities frozen at the entry state y:
//   1. drift          y <- max(0, y + h * (beta(y) - y * sum_j z_j m_j))
//   2. branching jumps: per branching atom, n ~ Poisson(y * m_j * h), y += n*z_j
//   3. immigration jumps: per immigration atom, n ~ Poisson(q_j(y)*pi_j*h), y += n*z_j
//   4. exact linear-diffusion transition (feller_step_exact with b, c).
// With no atoms and beta == 0 this reduces bitwise to feller_step_exact on
// the same stream.  Weak order 1 in h.
double sde_step(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                double y, double h, RngStream& rng, SdeStepStats* stats = nullptr);

// Path marginals at the times in t_grid, which must sit on the step grid
// (integer multiples of dt within 1e-9 relative).  Per-(path, step) streams;
// output is identical for every worker count.
Ensemble sde_marginals(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                       double y0, std::span<const double> t_grid, double dt,
                       std::int64_t n_paths, std::uint64_t master_seed,
                       int workers = 0, SdeStepStats* stats = nullptr);

// Single-threaded reference implementation, kept for testing and benchmarks.
Ensemble sde_marginals_serial(const BranchingMechanism& mech,
                              const ImmigrationMechanism& imm, double y0,
                              std::span<const double> t_grid, double dt,
                              std::int64_t n_paths, std::uint64_t master_seed,
                              SdeStepStats* stats = nullptr);

}  // namespace cbdi
