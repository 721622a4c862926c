// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace cbdi {

// Full command-line entry point.  Subcommands: construct, sim-discrete,
// sim-sde, verify-generator, verify-conditions, verify-moments,
// verify-martingale, compare, oracle, bernstein.  Common flags: --config,
// --out (default $CBDI_OUT_DIR, then the working directory), --seed
// (overrides the config seed), --workers, --k (restrict to one scale),
// --quiet.  Exit codes: 0 all assertions pass, 1 assertion failure,
// 2 configuration error, 3 runtime error.
int run_cli(int argc, const char* const* argv);

}  // namespace cbdi
