// SPDX-License-Identifier: Apache-2.0
#include "cbdi/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cbdi {

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> breakpoints,
                                     std::vector<double> values, double tail_slope)
    : breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      tail_slope_(tail_slope) {
    std::ostringstream err;
    auto fail = [&err](const std::string& msg) { err << "  - " << msg << "\n"; };

    if (breakpoints_.empty()) fail("breakpoints must be nonempty");
    if (breakpoints_.size() != values_.size())
        fail("breakpoints and values must have equal length");
    if (!breakpoints_.empty() && breakpoints_.front() != 0.0)
        fail("first breakpoint must be 0");
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (!std::isfinite(breakpoints_[i])) fail("breakpoints must be finite");
        if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
            fail("breakpoints must be strictly increasing");
    }
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0) {
            fail("values must be finite and nonnegative");
            break;
        }
    }
    if (!std::isfinite(tail_slope_) || tail_slope_ < 0.0)
        fail("tail slope must be finite and nonnegative");

    const std::string msg = err.str();
    if (!msg.empty())
        throw std::invalid_argument("invalid piecewise-linear function:\n" + msg);
}

PiecewiseLinearFn PiecewiseLinearFn::constant(double value) {
    return PiecewiseLinearFn({0.0}, {value}, 0.0);
}

double PiecewiseLinearFn::operator()(double x) const {
    if (!(x >= 0.0)) throw std::domain_error("piecewise-linear argument must be >= 0");
    if (x >= breakpoints_.back())
        return values_.back() + tail_slope_ * (x - breakpoints_.back());
    // Index of the segment [b_i, b_{i+1}) containing x.
    const auto it =
        std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    const double t = (x - breakpoints_[i]) / (breakpoints_[i + 1] - breakpoints_[i]);
    return values_[i] + t * (values_[i + 1] - values_[i]);
}

double PiecewiseLinearFn::lipschitz() const {
    double lip = tail_slope_;
    for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
        const double slope = (values_[i + 1] - values_[i]) /
                             (breakpoints_[i + 1] - breakpoints_[i]);
        lip = std::max(lip, std::fabs(slope));
    }
    return lip;
}

double PiecewiseLinearFn::sup_on(double hi) const {
    if (!(hi >= 0.0)) throw std::domain_error("sup_on needs hi >= 0");
    double sup = values_.front();
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (breakpoints_[i] <= hi) sup = std::max(sup, values_[i]);
    }
    sup = std::max(sup, (*this)(hi));
    return sup;
}

}  // namespace cbdi
