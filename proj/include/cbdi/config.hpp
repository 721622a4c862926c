// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbdi/mechanism.hpp"

namespace cbdi {

// Raised for unreadable, unparsable, or invalid configuration files.  The
// message lists every violation found, one per line, not just the first.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ToleranceSet {
    double mean_residual = 1e-10;  // offspring-mean identity residual
    double identity = 1e-12;       // generator two-term-split identity
    double bias_budget = 0.02;     // Laplace-transform comparison floor
    double ks_p_min = 1e-3;        // KS rejection threshold
};

struct BernsteinSection {
    std::vector<double> p_coeffs{0.0, 1.0, -1.0};  // p(u) = u - u^2
    std::vector<std::uint64_t> n_list{16, 64, 256};
    double x_max = 10.0;
    double x_step = 0.25;
};

struct ExperimentConfig {
    BranchingMechanism branching;
    ImmigrationMechanism immigration;

    std::vector<std::uint64_t> k_list;
    std::optional<double> K_hat;

    double y0 = 1.0;
    std::vector<double> t_grid;
    double dt = 0.0;
    std::int64_t n_paths = 0;
    std::uint64_t master_seed = 0;

    std::vector<double> lambda_grid;
    std::vector<double> x_grid;
    ToleranceSet tol;
    BernsteinSection bernstein;

    std::vector<std::string> warnings;  // load-time adjustments (dt snapping)
    std::uint64_t fingerprint = 0;      // hash of the canonical serialization
};

// Parses and validates a configuration document (JSON).  Collects all
// validation failures into one ConfigError; times not on the dt grid are
// snapped to the nearest multiple with a warning recorded on the config.
ExperimentConfig parse_config(const std::string& text);

// parse_config over the contents of `path`.
ExperimentConfig load_config(const std::string& path);

// Deterministic text form of every semantically meaningful field; the
// fingerprint is a hash of this string.
std::string canonical_string(const ExperimentConfig& cfg);

}  // namespace cbdi
