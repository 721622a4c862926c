// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cbdi {

// Monte Carlo marginals of one process at a set of times: samples[ti][path]
// holds the rescaled state of `path` at t_grid[ti].  The layout is fixed
// (time-major, path index ascending) so serialized output is reproducible
// byte-for-byte for a given (configuration, seed), independent of worker
// count.
struct EnsembleMeta {
    std::string kind;            // "discrete" or "sde"
    std::uint64_t k = 0;         // scale level (discrete only)
    double gamma_k = 0.0;        // generations per unit time (discrete only)
    double dt = 0.0;             // step size (sde only)
    double y0 = 0.0;
    std::vector<double> t_grid;
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
    std::uint64_t fingerprint = 0;  // hash of the generating configuration
};

struct Ensemble {
    EnsembleMeta meta;
    std::vector<std::vector<double>> samples;
};

}  // namespace cbdi
