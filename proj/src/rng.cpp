// SPDX-License-Identifier: Apache-2.0
#include "cbdi/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "cbdi/expmath.hpp"

namespace cbdi {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t domain) {
    return splitmix64(master_seed ^ splitmix64(domain));
}

void RngStream::refill() {
    std::array<std::uint32_t, 4> x = ctr_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k0 += kPhiloxW0;
            k1 += kPhiloxW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hi_lo(kPhiloxM0, x[0], hi0, lo0);
        mul_hi_lo(kPhiloxM1, x[2], hi1, lo1);
        x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
    }
    buf_ = x;
    buf_pos_ = 0;
    // Per-stream block counter; a stream never consumes anywhere near 2^32
    // blocks in this codebase.
    ++ctr_[0];
}

double RngStream::normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

std::int64_t RngStream::poisson(double mean) {
    if (!(mean >= 0.0)) throw std::domain_error("poisson mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean > 1e15)
        throw std::overflow_error("poisson mean too large for exact sampling");
    if (mean < 10.0) {
        // Multiplicative sequential search.
        const double enlam = std::exp(-mean);
        std::int64_t x = 0;
        double prod = 1.0;
        for (;;) {
            prod *= next_double();
            if (prod > enlam)
                ++x;
            else
                return x;
        }
    }
    // Transformed rejection with squeeze (PTRS).  Exact: candidates from a
    // dominating density are accepted against the true pmf.
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = next_double() - 0.5;
        const double v = next_double();
        const double us = 0.5 - std::fabs(u);
        const auto k =
            static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
        if (us >= 0.07 && v <= vr) return k;
        if (k < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - log_factorial(static_cast<std::uint64_t>(k)))
            return k;
    }
}

namespace {

// Sequential inversion; exact, O(n*p) expected time.  Requires p <= 0.5.
std::int64_t binomial_inversion(RngStream& rng, std::int64_t n, double p) {
    const double q = 1.0 - p;
    const double qn = std::exp(static_cast<double>(n) * std::log(q));
    const double np = static_cast<double>(n) * p;
    const double bound =
        std::min(static_cast<double>(n), np + 10.0 * std::sqrt(np * q + 1.0));
    std::int64_t x = 0;
    double px = qn;
    double u = rng.next_double();
    while (u > px) {
        ++x;
        if (static_cast<double>(x) > bound) {
            x = 0;
            px = qn;
            u = rng.next_double();
        } else {
            u -= px;
            px = (static_cast<double>(n - x + 1) * p * px) / (static_cast<double>(x) * q);
        }
    }
    return x;
}

// Binomial triangle/parallelogram/exponential rejection (BTPE), the
// Kachitvichyanukul-Schmeiser accept/reject scheme.  Exact; expected O(1)
// per draw.  Requires p <= 0.5 and n*p >= 30.
std::int64_t binomial_btpe(RngStream& rng, std::int64_t n, double p) {
    const double r = p;
    const double q = 1.0 - r;
    const double fm = static_cast<double>(n) * r + r;
    const auto m = static_cast<std::int64_t>(std::floor(fm));
    const double nrq = static_cast<double>(n) * r * q;
    const double p1 = std::floor(2.195 * std::sqrt(nrq) - 4.6 * q) + 0.5;
    const double xm = static_cast<double>(m) + 0.5;
    const double xl = xm - p1;
    const double xr = xm + p1;
    const double c = 0.134 + 20.5 / (15.3 + static_cast<double>(m));
    double a = (fm - xl) / (fm - xl * r);
    const double laml = a * (1.0 + a / 2.0);
    a = (xr - fm) / (xr * q);
    const double lamr = a * (1.0 + a / 2.0);
    const double p2 = p1 * (1.0 + 2.0 * c);
    const double p3 = p2 + c / laml;
    const double p4 = p3 + c / lamr;

    std::int64_t y;
    double u, v, x;

Step10:
    u = rng.next_double() * p4;
    v = rng.next_double();
    if (u > p1) goto Step20;
    // Triangular central region.
    y = static_cast<std::int64_t>(std::floor(xm - p1 * v + u));
    goto Step60;

Step20:
    if (u > p2) goto Step30;
    // Parallelogram region.
    x = xl + (u - p1) / c;
    v = v * c + 1.0 - std::fabs(static_cast<double>(m) - x + 0.5) / p1;
    if (v > 1.0) goto Step10;
    y = static_cast<std::int64_t>(std::floor(x));
    goto Step50;

Step30:
    if (u > p3) goto Step40;
    // Left exponential tail.
    y = static_cast<std::int64_t>(std::floor(xl + std::log(v) / laml));
    if (y < 0) goto Step10;
    v = v * (u - p2) * laml;
    goto Step50;

Step40:
    // Right exponential tail.
    y = static_cast<std::int64_t>(std::floor(xr - std::log(v) / lamr));
    if (y > n) goto Step10;
    v = v * (u - p3) * lamr;

Step50: {
    // Acceptance test; a product form for candidates near the mode, a
    // squeeze plus Stirling comparison further out.
    const std::int64_t k = std::llabs(y - m);
    if (k > 20 && static_cast<double>(k) < nrq / 2.0 - 1.0) goto Step52;
    const double s = r / q;
    a = s * static_cast<double>(n + 1);
    double F = 1.0;
    if (m < y) {
        for (std::int64_t i = m + 1; i <= y; ++i)
            F *= a / static_cast<double>(i) - s;
    } else if (m > y) {
        for (std::int64_t i = y + 1; i <= m; ++i)
            F /= a / static_cast<double>(i) - s;
    }
    if (v > F) goto Step10;
    goto Step60;
}

Step52: {
    const double k = std::fabs(static_cast<double>(y - m));
    const double rho =
        (k / nrq) * ((k * (k / 3.0 + 0.625) + 0.16666666666666666) / nrq + 0.5);
    const double t = -k * k / (2.0 * nrq);
    const double A = std::log(v);
    if (A < t - rho) goto Step60;
    if (A > t + rho) goto Step10;
    const double x1 = static_cast<double>(y + 1);
    const double f1 = static_cast<double>(m + 1);
    const double z = static_cast<double>(n + 1 - m);
    const double w = static_cast<double>(n - y + 1);
    const double x2 = x1 * x1;
    const double f2 = f1 * f1;
    const double z2 = z * z;
    const double w2 = w * w;
    const double stirling =
        xm * std::log(f1 / x1) + (static_cast<double>(n - m) + 0.5) * std::log(z / w) +
        static_cast<double>(y - m) * std::log(w * r / (x1 * q)) +
        (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / f2) / f2) / f2) / f2) / f1 /
            166320.0 +
        (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / z2) / z2) / z2) / z2) / z /
            166320.0 +
        (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / x2) / x2) / x2) / x2) / x1 /
            166320.0 +
        (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / w2) / w2) / w2) / w2) / w /
            166320.0;
    if (A > stirling) goto Step10;
}

Step60:
    return y;
}

}  // namespace

std::int64_t RngStream::binomial(std::int64_t n, double p) {
    if (n < 0 || !(p >= 0.0) || !(p <= 1.0))
        throw std::domain_error("binomial requires n >= 0 and p in [0, 1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    const bool flip = p > 0.5;
    const double q = flip ? 1.0 - p : p;
    const std::int64_t x = (q * static_cast<double>(n) <= 30.0)
                               ? binomial_inversion(*this, n, q)
                               : binomial_btpe(*this, n, q);
    return flip ? n - x : x;
}

double RngStream::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::domain_error("gamma requires shape > 0 and scale > 0");
    if (shape < 1.0) {
        // Boost the shape by one, then correct with a uniform power.
        const double g = gamma(shape + 1.0, scale);
        return g * std::pow(next_double_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double cc = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double xn, vv;
        do {
            xn = normal();
            vv = 1.0 + cc * xn;
        } while (vv <= 0.0);
        vv = vv * vv * vv;
        const double u = next_double_open();
        if (u < 1.0 - 0.0331 * xn * xn * xn * xn) return d * vv * scale;
        if (std::log(u) < 0.5 * xn * xn + d * (1.0 - vv + std::log(vv)))
            return d * vv * scale;
    }
}

}  // namespace cbdi
