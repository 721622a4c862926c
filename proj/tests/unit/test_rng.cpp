// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "cbdi/expmath.hpp"
#include "cbdi/rng.hpp"
#include "support/chi_square.hpp"

using namespace cbdi;

namespace {

double poisson_pmf(std::int64_t j, double mean) {
    return std::exp(static_cast<double>(j) * std::log(mean) - mean -
                    log_factorial(static_cast<std::uint64_t>(j)));
}

double binomial_pmf(std::int64_t j, std::int64_t n, double p) {
    const double lc = log_factorial(static_cast<std::uint64_t>(n)) -
                      log_factorial(static_cast<std::uint64_t>(j)) -
                      log_factorial(static_cast<std::uint64_t>(n - j));
    return std::exp(lc + static_cast<double>(j) * std::log(p) +
                    static_cast<double>(n - j) * std::log1p(-p));
}

// Tail-inclusive cell probabilities for draws clamped onto {lo..hi}.
template <typename Pmf>
std::vector<double> clamped_probs(std::int64_t lo, std::int64_t hi, Pmf pmf) {
    std::vector<double> probs(static_cast<std::size_t>(hi - lo + 1), 0.0);
    double inside = 0.0;
    for (std::int64_t j = lo; j <= hi; ++j) {
        probs[static_cast<std::size_t>(j - lo)] = pmf(j);
        inside += probs[static_cast<std::size_t>(j - lo)];
    }
    probs.back() += std::max(0.0, 1.0 - inside);
    return probs;
}

}  // namespace

TEST_CASE("chi-square helper reproduces closed-form survival functions") {
    CHECK(test_support::gammq(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-13));
    for (double x : {0.1, 0.5, 2.0, 5.0}) {
        CHECK(test_support::gammq(0.5, x) ==
              doctest::Approx(std::erfc(std::sqrt(x))).epsilon(1e-12));
    }
    CHECK(test_support::gammq(3.0, 0.0) == 1.0);
}

TEST_CASE("streams are reproducible and distinct across paths and substreams") {
    RngStream a(123, 7, 9), b(123, 7, 9);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(123, 8, 9), d(123, 7, 10), e(124, 7, 9);
    RngStream base(123, 7, 9);
    const std::uint64_t first = base.next_u64();
    CHECK(c.next_u64() != first);
    CHECK(d.next_u64() != first);
    CHECK(e.next_u64() != first);
}

TEST_CASE("stream key derivation separates domains and seeds") {
    const std::uint64_t seed = 20260817;
    CHECK(derive_stream_key(seed, stream_domain::discrete(16)) !=
          derive_stream_key(seed, stream_domain::discrete(17)));
    CHECK(derive_stream_key(seed, stream_domain::discrete(16)) !=
          derive_stream_key(seed, stream_domain::sde()));
    CHECK(derive_stream_key(seed, stream_domain::sde()) !=
          derive_stream_key(seed, stream_domain::generic()));
    CHECK(derive_stream_key(seed, stream_domain::sde()) !=
          derive_stream_key(seed + 1, stream_domain::sde()));
}

TEST_CASE("uniform doubles stay inside their half-open ranges with mean one half") {
    RngStream rng(2024, 0, 0);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    const double se = std::sqrt(1.0 / 12.0 / n);
    CHECK(std::fabs(sum / n - 0.5) <= 4.0 * se);

    RngStream rng2(2024, 1, 0);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng2.next_double_open();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("poisson draws follow the exact law in both sampling regimes") {
    RngStream probe(1, 0, 0);
    CHECK(probe.poisson(0.0) == 0);
    CHECK_THROWS_AS(probe.poisson(-1.0), std::domain_error);
    CHECK_THROWS_AS(probe.poisson(2e15), std::overflow_error);

    const std::int64_t n = 100000;
    int case_idx = 0;
    for (double mean : {0.5, 3.0, 30.0, 300.0}) {
        RngStream rng(777, 0, static_cast<std::uint64_t>(case_idx++));
        std::vector<std::int64_t> draws;
        draws.reserve(n);
        for (std::int64_t i = 0; i < n; ++i) draws.push_back(rng.poisson(mean));
        const std::int64_t lo =
            std::max<std::int64_t>(0, static_cast<std::int64_t>(mean - 8 * std::sqrt(mean)));
        const std::int64_t hi =
            static_cast<std::int64_t>(mean + 8 * std::sqrt(mean)) + 3;
        const double p = test_support::chi_square_gof_p(
            test_support::bin_counts(draws, lo, hi),
            clamped_probs(lo, hi, [&](std::int64_t j) { return poisson_pmf(j, mean); }));
        CHECK(p >= 1e-4);
    }
}

TEST_CASE("binomial draws follow the exact law in both sampling regimes") {
    RngStream probe(1, 0, 1);
    CHECK(probe.binomial(0, 0.5) == 0);
    CHECK(probe.binomial(10, 0.0) == 0);
    CHECK(probe.binomial(10, 1.0) == 10);
    CHECK_THROWS_AS(probe.binomial(-1, 0.5), std::domain_error);
    CHECK_THROWS_AS(probe.binomial(10, 1.5), std::domain_error);

    struct Case {
        std::int64_t n;
        double p;
    };
    const Case cases[] = {{10, 0.3}, {40, 0.1}, {1000, 0.002}, {100, 0.47}, {500, 0.7}};
    const std::int64_t draws_n = 100000;
    int case_idx = 0;
    for (const auto& c : cases) {
        RngStream rng(888, 1, static_cast<std::uint64_t>(case_idx++));
        std::vector<std::int64_t> draws;
        draws.reserve(draws_n);
        for (std::int64_t i = 0; i < draws_n; ++i) draws.push_back(rng.binomial(c.n, c.p));
        const double mu = static_cast<double>(c.n) * c.p;
        const double sd = std::sqrt(mu * (1.0 - c.p));
        const std::int64_t lo =
            std::max<std::int64_t>(0, static_cast<std::int64_t>(mu - 8 * sd));
        const std::int64_t hi =
            std::min<std::int64_t>(c.n, static_cast<std::int64_t>(mu + 8 * sd) + 3);
        const double p = test_support::chi_square_gof_p(
            test_support::bin_counts(draws, lo, hi),
            clamped_probs(lo, hi,
                          [&](std::int64_t j) { return binomial_pmf(j, c.n, c.p); }));
        CHECK(p >= 1e-4);
    }
}

TEST_CASE("gamma draws match their moments and laplace transform") {
    RngStream probe(1, 0, 2);
    CHECK_THROWS_AS(probe.gamma(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(probe.gamma(1.0, -1.0), std::domain_error);

    struct Case {
        double shape;
        double scale;
    };
    const Case cases[] = {{0.5, 2.0}, {1.0, 1.0}, {4.5, 0.5}};
    const std::int64_t n = 100000;
    int case_idx = 0;
    for (const auto& c : cases) {
        RngStream rng(999, 2, static_cast<std::uint64_t>(case_idx++));
        double sum = 0.0, lt_sum = 0.0, lt_sq = 0.0;
        const double s = 0.7;
        for (std::int64_t i = 0; i < n; ++i) {
            const double g = rng.gamma(c.shape, c.scale);
            CHECK(g >= 0.0);
            sum += g;
            const double e = std::exp(-s * g);
            lt_sum += e;
            lt_sq += e * e;
        }
        const double mean = sum / static_cast<double>(n);
        const double mean_se =
            std::sqrt(c.shape) * c.scale / std::sqrt(static_cast<double>(n));
        CHECK(std::fabs(mean - c.shape * c.scale) <= 4.0 * mean_se);

        const double lt_mean = lt_sum / static_cast<double>(n);
        const double lt_var = (lt_sq - static_cast<double>(n) * lt_mean * lt_mean) /
                              static_cast<double>(n - 1);
        const double lt_exact = std::pow(1.0 + s * c.scale, -c.shape);
        CHECK(std::fabs(lt_mean - lt_exact) <=
              4.0 * std::sqrt(lt_var / static_cast<double>(n)));
    }
}

TEST_CASE("normal and exponential draws match their first two moments") {
    RngStream rng(31337, 0, 0);
    const std::int64_t n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    CHECK(std::fabs(sum / n) <= 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::fabs(sumsq / n - 1.0) <= 4.0 * std::sqrt(2.0 / static_cast<double>(n)));

    double esum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) esum += rng.exponential();
    CHECK(std::fabs(esum / n - 1.0) <= 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("log factorial agrees with lgamma across the full range") {
    for (std::uint64_t k : {0ull, 1ull, 2ull, 5ull, 20ull, 100ull, 255ull, 256ull,
                            1000ull, 100000ull, 1000000000ull}) {
        const double ref = std::lgamma(static_cast<double>(k) + 1.0);
        CHECK(std::fabs(log_factorial(k) - ref) <= 1e-12 * std::max(1.0, ref));
    }
}

TEST_CASE("compensated exponential remainder is accurate at every magnitude") {
    const auto reference = [](long double u) {
        if (u <= 0.01L) {
            long double term = u * u / 2.0L;
            long double sum = term;
            for (int n = 3; n <= 12; ++n) {
                term *= -u / static_cast<long double>(n);
                sum += term;
            }
            return sum;
        }
        return std::expm1(-u) + u;
    };
    for (double u : {1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0, 5.0, 10.0}) {
        const long double exact = reference(static_cast<long double>(u));
        const double got = expm1_plus(u);
        CHECK(std::fabs(got - static_cast<double>(exact)) <=
              1e-13 * static_cast<double>(exact));
    }
    CHECK(expm1_plus(0.0) == 0.0);
}
