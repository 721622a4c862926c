// SPDX-License-Identifier: Apache-2.0
//
// Times the path-parallel ensemble kernels against their single-threaded
// reference implementations and checks that the two agree bitwise.
#include <chrono>
#include <cstdio>
#include <vector>

#include <CLI11.hpp>

#include "cbdi/cbdi_sim.hpp"
#include "cbdi/construct.hpp"
#include "cbdi/discrete_sim.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool same_samples(const cbdi::Ensemble& a, const cbdi::Ensemble& b) {
    if (a.samples.size() != b.samples.size()) return false;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        if (a.samples[i] != b.samples[i]) return false;
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    std::uint64_t k = 256;
    std::int64_t paths = 4000;
    double horizon = 0.5;
    double dt = 1.0 / 1024.0;
    int workers = 0;
    std::uint64_t seed = 1;

    CLI::App app{"serial vs parallel ensemble kernel benchmark"};
    app.add_option("--k", k, "discrete scale level");
    app.add_option("--paths", paths, "paths per ensemble");
    app.add_option("--t", horizon, "time horizon");
    app.add_option("--dt", dt, "SDE step size");
    app.add_option("--workers", workers, "threads for the parallel kernel");
    app.add_option("--seed", seed, "master seed");
    CLI11_PARSE(app, argc, argv);

    cbdi::BranchingMechanism mech;
    mech.b = 0.5;
    mech.c = 0.5;
    mech.m = cbdi::FiniteAtomicMeasure({{0.5, 2.0}});
    cbdi::ImmigrationMechanism imm;
    imm.beta = cbdi::PiecewiseLinearFn({0.0}, {0.2}, 0.1);
    imm.atoms.push_back(
        {1.0, 1.0, cbdi::PiecewiseLinearFn({0.0, 50.0}, {0.0, 15.0}, 0.0)});

    const std::vector<double> t_grid{horizon};
    const cbdi::ScaledModel model = cbdi::build_scaled_model(mech, imm, k);
    std::printf("discrete: k=%llu gamma_k=%.6g paths=%lld\n",
                static_cast<unsigned long long>(k), model.gamma_k,
                static_cast<long long>(paths));

    auto start = Clock::now();
    const cbdi::Ensemble d_serial =
        cbdi::rescaled_marginals_serial(model, 1.0, t_grid, paths, seed);
    const double d_serial_ms = ms_since(start);
    start = Clock::now();
    const cbdi::Ensemble d_par =
        cbdi::rescaled_marginals(model, 1.0, t_grid, paths, seed, workers);
    const double d_par_ms = ms_since(start);
    std::printf("  serial   %10.1f ms\n  parallel %10.1f ms  speedup %.2fx  %s\n",
                d_serial_ms, d_par_ms, d_serial_ms / d_par_ms,
                same_samples(d_serial, d_par) ? "bitwise equal" : "MISMATCH");

    std::printf("sde: dt=%.6g paths=%lld\n", dt, static_cast<long long>(paths));
    start = Clock::now();
    const cbdi::Ensemble s_serial =
        cbdi::sde_marginals_serial(mech, imm, 1.0, t_grid, dt, paths, seed);
    const double s_serial_ms = ms_since(start);
    start = Clock::now();
    const cbdi::Ensemble s_par =
        cbdi::sde_marginals(mech, imm, 1.0, t_grid, dt, paths, seed, workers);
    const double s_par_ms = ms_since(start);
    std::printf("  serial   %10.1f ms\n  parallel %10.1f ms  speedup %.2fx  %s\n",
                s_serial_ms, s_par_ms, s_serial_ms / s_par_ms,
                same_samples(s_serial, s_par) ? "bitwise equal" : "MISMATCH");

    return same_samples(d_serial, d_par) && same_samples(s_serial, s_par) ? 0 : 1;
}
