// SPDX-License-Identifier: Apache-2.0
#include "cbdi/pgf.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cbdi {
namespace pgf_detail {

void validate_and_normalize(std::vector<PgfComponent>& comps) {
    std::ostringstream err;
    if (comps.empty()) err << "  - mixture needs at least one component\n";
    double sum = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& c = comps[i];
        if (!std::isfinite(c.weight) || c.weight < 0.0)
            err << "  - component " << i << ": weight must be >= 0\n";
        if (c.kind == PgfKind::dirac && c.dirac_value > 2)
            err << "  - component " << i << ": dirac value must be 0, 1 or 2\n";
        if (c.kind == PgfKind::poisson &&
            (!std::isfinite(c.poisson_mean) || c.poisson_mean < 0.0))
            err << "  - component " << i << ": poisson mean must be >= 0\n";
        sum += c.weight;
    }
    if (err.str().empty() && std::fabs(sum - 1.0) > 1e-9)
        err << "  - weights sum to " << sum << ", expected 1 within 1e-9\n";
    const std::string msg = err.str();
    if (!msg.empty()) throw std::invalid_argument("invalid mixture:\n" + msg);
    for (auto& c : comps) c.weight /= sum;
    std::erase_if(comps, [](const PgfComponent& c) { return c.weight == 0.0; });
}

double eval_components(std::span<const PgfComponent> comps, double s) {
    if (!(s >= 0.0) || !(s <= 1.0))
        throw std::domain_error("generating functions take arguments in [0, 1]");
    double v = 0.0;
    for (const auto& c : comps) {
        if (c.kind == PgfKind::dirac) {
            const double phi = c.dirac_value == 0 ? 1.0
                               : c.dirac_value == 1 ? s
                                                    : s * s;
            v += c.weight * phi;
        } else {
            v += c.weight * std::exp(-c.poisson_mean * (1.0 - s));
        }
    }
    return v;
}

double mean_components(std::span<const PgfComponent> comps) {
    double m = 0.0;
    for (const auto& c : comps)
        m += c.weight * (c.kind == PgfKind::dirac ? static_cast<double>(c.dirac_value)
                                                  : c.poisson_mean);
    return m;
}

std::uint64_t sample_components(std::span<const PgfComponent> comps, RngStream& rng) {
    const double u = rng.next_double();
    double cum = 0.0;
    std::size_t pick = comps.size() - 1;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        cum += comps[i].weight;
        if (u < cum) {
            pick = i;
            break;
        }
    }
    const auto& c = comps[pick];
    if (c.kind == PgfKind::dirac) return c.dirac_value;
    return static_cast<std::uint64_t>(rng.poisson(c.poisson_mean));
}

namespace {

void add_checked(std::uint64_t& total, std::uint64_t part) {
    if (part > kPopulationCap || total > kPopulationCap - part)
        throw std::overflow_error("population exceeds the 2^62 cap");
    total += part;
}

}  // namespace

std::uint64_t iid_sum_components(std::span<const PgfComponent> comps, std::uint64_t n,
                                 RngStream& rng) {
    if (n == 0) return 0;
    if (n > kPopulationCap)
        throw std::overflow_error("population exceeds the 2^62 cap");
    std::uint64_t total = 0;
    std::uint64_t remaining = n;
    double wrem = 1.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        std::uint64_t cnt;
        if (i + 1 == comps.size()) {
            cnt = remaining;
        } else {
            double pj = comps[i].weight / wrem;
            pj = std::min(1.0, std::max(0.0, pj));
            cnt = static_cast<std::uint64_t>(
                rng.binomial(static_cast<std::int64_t>(remaining), pj));
            remaining -= cnt;
            wrem -= comps[i].weight;
        }
        if (cnt == 0) continue;
        if (comps[i].kind == PgfKind::dirac) {
            add_checked(total, cnt * comps[i].dirac_value);
        } else {
            const double mean = static_cast<double>(cnt) * comps[i].poisson_mean;
            add_checked(total, static_cast<std::uint64_t>(rng.poisson(mean)));
        }
    }
    return total;
}

}  // namespace pgf_detail

double pgf_eval(const MixturePGF& law, double s) {
    return pgf_detail::eval_components(law.components(), s);
}

double pgf_mean(const MixturePGF& law) {
    return pgf_detail::mean_components(law.components());
}

std::uint64_t pgf_sample(const MixturePGF& law, RngStream& rng) {
    return pgf_detail::sample_components(law.components(), rng);
}

std::uint64_t iid_sum_sample(const MixturePGF& law, std::uint64_t n, RngStream& rng) {
    return pgf_detail::iid_sum_components(law.components(), n, rng);
}

double pgf_power_eval(const MixturePGF& law, double s, double exponent) {
    if (!(exponent >= 0.0)) throw std::domain_error("exponent must be >= 0");
    if (exponent == 0.0) return 1.0;
    const double g = pgf_eval(law, s);
    if (g == 0.0) return 0.0;
    return std::exp(exponent * std::log(g));
}

}  // namespace cbdi
