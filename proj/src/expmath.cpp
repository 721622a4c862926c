// SPDX-License-Identifier: Apache-2.0
#include "cbdi/expmath.hpp"

#include <array>
#include <cmath>

namespace cbdi {

namespace {

constexpr int kTableSize = 1024;

std::array<double, kTableSize> build_table() {
    std::array<double, kTableSize> t{};
    t[0] = 0.0;
    long double acc = 0.0L;
    for (int i = 1; i < kTableSize; ++i) {
        acc += std::log(static_cast<long double>(i));
        t[i] = static_cast<double>(acc);
    }
    return t;
}

}  // namespace

double log_factorial(std::uint64_t k) {
    static const std::array<double, kTableSize> table = build_table();
    if (k < kTableSize) return table[k];
    // Stirling series; for k >= 1024 the truncation error is far below 1 ulp.
    const double x = static_cast<double>(k) + 1.0;
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return (x - 0.5) * std::log(x) - x + 0.9189385332046727 +
           inv * (1.0 / 12.0 + inv2 * (-1.0 / 360.0 + inv2 * (1.0 / 1260.0)));
}

}  // namespace cbdi
