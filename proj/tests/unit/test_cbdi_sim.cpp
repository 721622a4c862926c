// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "cbdi/cbdi_sim.hpp"
#include "cbdi/verify.hpp"

using namespace cbdi;

namespace {

// Laplace exponent of the exact linear-diffusion transition over one step.
double transition_exponent(double b, double c, double h, double lambda) {
    const double p = std::exp(-b * h);
    const double theta = b == 0.0 ? c * h : c * (1.0 - p) / b;
    return p * lambda / (1.0 + theta * lambda);
}

// Exact transform of the split scheme for b=0, constant immigration drift
// beta, no jumps: one step composes a deterministic shift by beta*h with the
// diffusion transition, so over n steps of size h (with v_s = l/(1+c*l*s))
//   E exp(-l Y_t) = exp(-y0*v_t(l) - beta*h*sum_{j=1..n} v_{jh}(l)).
double scheme_lt(double c, double beta, double y0, double t, double h, double lambda) {
    const auto n = static_cast<std::int64_t>(std::llround(t / h));
    auto v = [&](double s) { return lambda / (1.0 + c * lambda * s); };
    double sum = 0.0;
    for (std::int64_t j = 1; j <= n; ++j) sum += v(static_cast<double>(j) * h);
    return std::exp(-y0 * v(t) - beta * h * sum);
}

struct MeanSe {
    double mean;
    double se;
};

MeanSe lt_stats(const std::vector<double>& samples, double lambda) {
    double sum = 0.0, sumsq = 0.0;
    for (double y : samples) {
        const double e = std::exp(-lambda * y);
        sum += e;
        sumsq += e * e;
    }
    const double n = static_cast<double>(samples.size());
    const double mean = sum / n;
    const double var = (sumsq - n * mean * mean) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace

TEST_CASE("diffusion transition degenerates to deterministic decay without noise") {
    RngStream rng(1, 0, 0);
    CHECK(feller_step_exact(0.0, 0.0, 1.37, 0.25, rng) == 1.37);
    CHECK(feller_step_exact(0.4, 0.0, 2.0, 0.5, rng) ==
          doctest::Approx(2.0 * std::exp(-0.2)).epsilon(1e-15));
    CHECK(feller_step_exact(0.4, 1.0, 0.0, 0.5, rng) == 0.0);
}

TEST_CASE("diffusion transition matches its transform for every drift sign") {
    struct Case {
        double b, c, y, h;
    };
    const Case cases[] = {{0.0, 1.0, 2.0, 0.25}, {0.4, 1.0, 2.0, 0.25},
                          {-0.4, 1.0, 2.0, 0.25}};
    const std::int64_t n = 40000;
    int idx = 0;
    for (const auto& cs : cases) {
        std::vector<double> draws;
        draws.reserve(n);
        RngStream rng(515, 0, static_cast<std::uint64_t>(idx++));
        for (std::int64_t i = 0; i < n; ++i) {
            const double y = feller_step_exact(cs.b, cs.c, cs.y, cs.h, rng);
            CHECK(y >= 0.0);
            draws.push_back(y);
        }
        for (double lambda : {0.5, 1.0, 2.0}) {
            const auto st = lt_stats(draws, lambda);
            const double exact =
                std::exp(-cs.y * transition_exponent(cs.b, cs.c, cs.h, lambda));
            CHECK(std::fabs(st.mean - exact) <= 4.0 * st.se);
        }
    }
}

TEST_CASE("transition exponent solves the drift-diffusion flow equation") {
    for (double b : {0.0, 0.4, -0.4}) {
        for (double lambda : {0.5, 1.0, 2.0}) {
            const double c = 1.0, t = 0.25;
            double v = lambda;
            const int steps = 2500;
            const double h = t / steps;
            for (int i = 0; i < steps; ++i) {
                auto f = [&](double w) { return -(b * w + c * w * w); };
                const double k1 = f(v);
                const double k2 = f(v + 0.5 * h * k1);
                const double k3 = f(v + 0.5 * h * k2);
                const double k4 = f(v + h * k3);
                v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            CHECK(std::fabs(v - transition_exponent(b, c, t, lambda)) <= 1e-10);
        }
    }
}

TEST_CASE("null mechanisms make the split step an exact identity") {
    BranchingMechanism mech{};
    ImmigrationMechanism imm{};
    RngStream rng(9, 0, 0);
    for (double y : {0.0, 0.5, 1.37, 42.0}) {
        CHECK(sde_step(mech, imm, y, 0.125, rng) == y);
    }
}

TEST_CASE("split step without jumps reduces bitwise to the diffusion transition") {
    BranchingMechanism mech{0.3, 0.8, FiniteAtomicMeasure{}};
    ImmigrationMechanism imm{};
    for (std::uint64_t sub = 0; sub < 100; ++sub) {
        RngStream a(2024, 1, sub), b(2024, 1, sub);
        const double ya = sde_step(mech, imm, 2.0, 0.25, a);
        const double yb = feller_step_exact(0.3, 0.8, 2.0, 0.25, b);
        CHECK(ya == yb);
    }
}

TEST_CASE("constant immigration drift accumulates exactly without noise sources") {
    BranchingMechanism mech{};
    ImmigrationMechanism imm{PiecewiseLinearFn::constant(1.0), {}};
    const std::vector<double> t_grid{0.5, 1.0};
    const Ensemble ens = sde_marginals(mech, imm, 1.0, t_grid, 1.0 / 64.0, 25, 3);
    for (double v : ens.samples[0]) CHECK(v == 1.5);
    for (double v : ens.samples[1]) CHECK(v == 2.0);
    CHECK(ens.meta.kind == "sde");
    CHECK(ens.meta.dt == 1.0 / 64.0);
}

TEST_CASE("compensated branching jumps preserve the mean while adding noise") {
    BranchingMechanism mech{0.0, 0.5, FiniteAtomicMeasure({{1.0, 0.8}})};
    ImmigrationMechanism imm{};
    const std::vector<double> t_grid{0.25, 0.5};
    const Ensemble ens = sde_marginals(mech, imm, 1.0, t_grid, 1.0 / 64.0, 20000, 17);
    for (const auto& row : ens.samples) {
        double sum = 0.0, sumsq = 0.0;
        for (double y : row) {
            CHECK(y >= 0.0);
            sum += y;
            sumsq += y * y;
        }
        const double n = static_cast<double>(row.size());
        const double mean = sum / n;
        const double var = (sumsq - n * mean * mean) / (n - 1.0);
        const double se = std::sqrt(var / n);
        CHECK(std::fabs(mean - 1.0) <= 4.0 * se);
        CHECK(var > 0.0);
    }
}

TEST_CASE("strong downward compensation floors the drift and stays nonnegative") {
    BranchingMechanism mech{0.0, 0.0, FiniteAtomicMeasure({{1.0, 3.0}})};
    ImmigrationMechanism imm{};
    SdeStepStats stats;
    const std::vector<double> t_grid{1.0};
    const Ensemble ens =
        sde_marginals(mech, imm, 1.0, t_grid, 0.5, 200, 23, 0, &stats);
    CHECK(stats.floored > 0);
    for (double y : ens.samples[0]) CHECK(y >= 0.0);
}

TEST_CASE("scheme transform converges to the closed form at first order in the step") {
    const double y0 = 1.0, t = 1.0;
    for (double lambda : {0.5, 1.0, 2.0}) {
        const double oracle = cbi_laplace_oracle(1.0, 1.0, y0, t, lambda);
        const double bias_coarse =
            scheme_lt(1.0, 1.0, y0, t, std::pow(2.0, -8), lambda) - oracle;
        const double bias_fine =
            scheme_lt(1.0, 1.0, y0, t, std::pow(2.0, -9), lambda) - oracle;
        const double ratio = bias_fine / bias_coarse;
        CHECK(ratio >= 0.45);
        CHECK(ratio <= 0.55);
    }
}

TEST_CASE("simulated marginals match the exact scheme transform") {
    BranchingMechanism mech{0.0, 1.0, FiniteAtomicMeasure{}};
    ImmigrationMechanism imm{PiecewiseLinearFn::constant(1.0), {}};
    const double dt = 1.0 / 64.0;
    const std::vector<double> t_grid{1.0};
    const Ensemble ens = sde_marginals(mech, imm, 1.0, t_grid, dt, 40000, 271828);
    for (double lambda : {0.5, 1.0, 2.0}) {
        const auto st = lt_stats(ens.samples[0], lambda);
        const double exact = scheme_lt(1.0, 1.0, 1.0, 1.0, dt, lambda);
        CHECK(std::fabs(st.mean - exact) <= 4.0 * st.se);
    }
}

TEST_CASE("marginal times must sit on the step grid") {
    BranchingMechanism mech{};
    ImmigrationMechanism imm{};
    const std::vector<double> bad{0.3};
    CHECK_THROWS_AS(sde_marginals(mech, imm, 1.0, bad, 0.25, 10, 1),
                    std::invalid_argument);
}

TEST_CASE("parallel and serial path loops agree bitwise") {
    BranchingMechanism mech{0.5, 0.5, FiniteAtomicMeasure({{0.5, 2.0}})};
    PiecewiseLinearFn beta({0.0}, {0.2}, 0.1);
    PiecewiseLinearFn q({0.0, 50.0}, {0.0, 15.0}, 0.0);
    ImmigrationMechanism imm{beta, {{1.0, 1.0, q}}};
    const std::vector<double> t_grid{0.25, 0.5};
    const Ensemble serial =
        sde_marginals_serial(mech, imm, 1.0, t_grid, 1.0 / 32.0, 400, 555);
    for (int workers : {1, 2, 4}) {
        const Ensemble par =
            sde_marginals(mech, imm, 1.0, t_grid, 1.0 / 32.0, 400, 555, workers);
        CHECK(par.samples == serial.samples);
    }
}
