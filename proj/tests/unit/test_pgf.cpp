// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "cbdi/pgf.hpp"
#include "support/chi_square.hpp"

using namespace cbdi;

namespace {

MixturePGF half_dirac0_half_poisson2() {
    return MixturePGF({PgfComponent::dirac(0.5, 0), PgfComponent::poisson(0.5, 2.0)});
}

// Mixture corpus exercising every component kind and both sampling regimes.
std::vector<MixturePGF> corpus() {
    std::vector<MixturePGF> laws;
    laws.push_back(MixturePGF({PgfComponent::dirac(0.5, 0), PgfComponent::dirac(0.3, 2),
                               PgfComponent::poisson(0.2, 1.5)}));
    laws.push_back(MixturePGF({PgfComponent::dirac(0.25, 0),
                               PgfComponent::dirac(0.25, 1),
                               PgfComponent::poisson(0.5, 0.7)}));
    laws.push_back(MixturePGF({PgfComponent::dirac(0.6, 1), PgfComponent::dirac(0.2, 2),
                               PgfComponent::poisson(0.2, 4.0)}));
    return laws;
}

}  // namespace

TEST_CASE("mixture validation rejects bad weights and lists every violation") {
    CHECK_THROWS_AS(MixturePGF({PgfComponent::dirac(0.6, 0), PgfComponent::dirac(0.3, 1)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixturePGF({PgfComponent::dirac(-0.1, 0), PgfComponent::dirac(1.1, 1)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixturePGF({PgfComponent::dirac(1.0, 3)}), std::invalid_argument);
    CHECK_THROWS_AS(MixturePGF({PgfComponent::poisson(1.0, -2.0)}),
                    std::invalid_argument);

    // A tiny imbalance inside the 1e-9 budget is renormalized to exact mass 1.
    MixturePGF nudged({PgfComponent::dirac(0.5 + 1e-10, 0), PgfComponent::dirac(0.5, 1)});
    CHECK(pgf_eval(nudged, 1.0) == 1.0);

    // Zero-weight components are dropped from the canonical form.
    MixturePGF dropped({PgfComponent::dirac(0.0, 2), PgfComponent::dirac(1.0, 1)});
    CHECK(dropped.components().size() == 1);
}

TEST_CASE("generating function evaluation matches closed forms") {
    const auto laws = corpus();
    for (const auto& law : laws) CHECK(pgf_eval(law, 1.0) == 1.0);

    CHECK(pgf_eval(MixturePGF::dirac(1), 0.3) == 0.3);
    CHECK(pgf_eval(half_dirac0_half_poisson2(), 0.5) ==
          doctest::Approx(0.5 + 0.5 * std::exp(-1.0)).epsilon(1e-15));

    CHECK_THROWS_AS(pgf_eval(laws[0], -0.1), std::domain_error);
    CHECK_THROWS_AS(pgf_eval(laws[0], 1.1), std::domain_error);
}

TEST_CASE("generating functions are nondecreasing and convex on the unit interval") {
    for (const auto& law : corpus()) {
        double prev = pgf_eval(law, 0.0);
        for (double s = 0.05; s <= 1.0 + 1e-12; s += 0.05) {
            const double cur = pgf_eval(law, std::min(s, 1.0));
            CHECK(cur >= prev - 1e-12);
            prev = cur;
        }
        for (double s = 0.05; s <= 0.9; s += 0.05) {
            const double mid = pgf_eval(law, s);
            const double chord =
                0.5 * (pgf_eval(law, s - 0.05) + pgf_eval(law, s + 0.05));
            CHECK(mid <= chord + 1e-12);
        }
    }
}

TEST_CASE("mixture mean matches the slope of the generating function at 1") {
    CHECK(pgf_mean(MixturePGF::dirac(1)) == 1.0);
    MixturePGF law({PgfComponent::dirac(0.25, 2), PgfComponent::poisson(0.75, 4.0)});
    CHECK(pgf_mean(law) == doctest::Approx(3.5).epsilon(1e-15));

    const double h = 1e-7;
    const double fd = (pgf_eval(law, 1.0) - pgf_eval(law, 1.0 - h)) / h;
    CHECK(fd == doctest::Approx(pgf_mean(law)).epsilon(1e-5));
}

TEST_CASE("single draws are deterministic per stream and match the law's mean") {
    RngStream rng(42, 0, 0);
    for (int i = 0; i < 10; ++i) CHECK(pgf_sample(MixturePGF::dirac(2), rng) == 2);

    MixturePGF pois({PgfComponent::poisson(1.0, 3.0)});
    const std::int64_t n = 100000;
    double sum = 0.0;
    RngStream rng2(7, 1, 0);
    for (std::int64_t i = 0; i < n; ++i)
        sum += static_cast<double>(pgf_sample(pois, rng2));
    const double mean = sum / static_cast<double>(n);
    CHECK(std::fabs(mean - 3.0) <= 4.0 * std::sqrt(3.0 / static_cast<double>(n)));

    RngStream a(99, 5, 3), b(99, 5, 3);
    const auto law = corpus()[0];
    for (int i = 0; i < 200; ++i) CHECK(pgf_sample(law, a) == pgf_sample(law, b));
}

TEST_CASE("empirical transform of draws matches the analytic transform") {
    const auto law = corpus()[0];
    const std::int64_t n = 20000;
    for (double s : {0.2, 0.5, 0.9}) {
        RngStream rng(1234, 0, static_cast<std::uint64_t>(s * 100));
        double sum = 0.0, sumsq = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double v = std::pow(s, static_cast<double>(pgf_sample(law, rng)));
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / static_cast<double>(n);
        const double var =
            (sumsq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
        const double se = std::sqrt(var / static_cast<double>(n));
        CHECK(std::fabs(mean - pgf_eval(law, s)) <= 4.0 * se + 1e-12);
    }
}

TEST_CASE("aggregated sums respect edge counts and the population cap") {
    RngStream probe_a(5, 0, 0), probe_b(5, 0, 0);
    CHECK(iid_sum_sample(corpus()[0], 0, probe_a) == 0);
    // A zero-count sum consumes no randomness.
    CHECK(probe_a.next_u64() == probe_b.next_u64());

    RngStream rng(5, 0, 1);
    CHECK(iid_sum_sample(MixturePGF::dirac(1), 1000000000ull, rng) == 1000000000ull);

    CHECK_THROWS_AS(iid_sum_sample(MixturePGF::dirac(2), (1ull << 61) + 1, rng),
                    std::overflow_error);
}

TEST_CASE("aggregated one-step sums are indistinguishable from naive summation") {
    const std::int64_t draws = 20000;
    for (const auto& law : corpus()) {
        for (std::uint64_t n : {1ull, 5ull, 40ull}) {
            int passed = 0;
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                std::vector<std::int64_t> agg, naive;
                agg.reserve(draws);
                naive.reserve(draws);
                RngStream ra(1000 + seed, 0, n), rn(5000 + seed, 1, n);
                for (std::int64_t i = 0; i < draws; ++i) {
                    agg.push_back(
                        static_cast<std::int64_t>(iid_sum_sample(law, n, ra)));
                    std::uint64_t s = 0;
                    for (std::uint64_t j = 0; j < n; ++j) s += pgf_sample(law, rn);
                    naive.push_back(static_cast<std::int64_t>(s));
                }
                const std::int64_t hi =
                    static_cast<std::int64_t>(pgf_mean(law) * static_cast<double>(n) +
                                              8.0 * std::sqrt(static_cast<double>(n) *
                                                              (pgf_mean(law) + 4.0))) +
                    4;
                const double p = test_support::chi_square_two_sample_p(
                    test_support::bin_counts(agg, 0, hi),
                    test_support::bin_counts(naive, 0, hi));
                if (p >= 1e-3) ++passed;
            }
            CHECK(passed >= 18);
        }
    }
}

TEST_CASE("real powers of the generating function handle edge exponents") {
    const auto law = half_dirac0_half_poisson2();
    CHECK(pgf_power_eval(law, 0.5, 0.0) == 1.0);
    CHECK(pgf_power_eval(law, 1.0, 1000.0) == doctest::Approx(1.0).epsilon(1e-12));

    const double direct = std::pow(0.9, 1000.0);
    CHECK(pgf_power_eval(MixturePGF::dirac(1), 0.9, 1000.0) ==
          doctest::Approx(direct).epsilon(1e-12));

    CHECK(pgf_power_eval(MixturePGF::dirac(1), 0.0, 5.0) == 0.0);
    CHECK_THROWS_AS(pgf_power_eval(law, 0.5, -1.0), std::domain_error);
}
