// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace cbdi {

// Continuous nonnegative piecewise-linear function on [0, inf).
//
// Defined by strictly increasing breakpoints starting at 0, matching
// nonnegative values, and a nonnegative tail slope past the last breakpoint.
// Construction validates all of the above and throws std::invalid_argument
// listing every violation.
class PiecewiseLinearFn {
  public:
    PiecewiseLinearFn(std::vector<double> breakpoints, std::vector<double> values,
                      double tail_slope);

    static PiecewiseLinearFn constant(double value);
    static PiecewiseLinearFn zero() { return constant(0.0); }

    double operator()(double x) const;

    // Smallest Lipschitz constant: max absolute segment slope, tail included.
    double lipschitz() const;

    // Exact supremum over [0, hi] (hi >= 0), using the breakpoint structure.
    double sup_on(double hi) const;

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& values() const { return values_; }
    double tail_slope() const { return tail_slope_; }

  private:
    std::vector<double> breakpoints_;
    std::vector<double> values_;
    double tail_slope_;
};

}  // namespace cbdi
