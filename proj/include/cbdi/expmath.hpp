// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace cbdi {

// exp(-u) - 1 + u, evaluated without cancellation for small u >= 0.
//
// The naive expression loses all significant digits once u drops below
// sqrt(eps); a short Taylor series takes over there.  For u >= 1e-2 the
// expm1 form is accurate to a few ulp.
inline double expm1_plus(double u) {
    if (u < 1e-2) {
        // u^2/2 - u^3/6 + u^4/24 - u^5/120 + u^6/720, relative truncation
        // error below 1e-15 for u <= 1e-2.
        return u * u *
               (0.5 +
                u * (-1.0 / 6.0 +
                     u * (1.0 / 24.0 + u * (-1.0 / 120.0 + u * (1.0 / 720.0)))));
    }
    return std::expm1(-u) + u;
}

// ln(k!) with a cached table for small k and a Stirling series beyond it.
// Avoids std::lgamma in hot paths (glibc's lgamma writes the global signgam,
// which is unfriendly to threaded callers).
double log_factorial(std::uint64_t k);

}  // namespace cbdi
