// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbdi/rng.hpp"

namespace cbdi {

// Offspring/control laws live in a closed family of mixtures over
// {Dirac(0), Dirac(1), Dirac(2), Poisson(mu)}.  The family is closed under
// the i.i.d.-sum aggregation used by the simulator: Dirac counts add
// deterministically and a sum of n independent Poisson(mu) draws is one
// Poisson(n*mu) draw.
enum class PgfKind : std::uint8_t { dirac, poisson };

struct PgfComponent {
    double weight;
    PgfKind kind;
    std::uint32_t dirac_value;  // 0, 1 or 2 when kind == dirac
    double poisson_mean;        // >= 0 when kind == poisson

    static PgfComponent dirac(double w, std::uint32_t value) {
        return {w, PgfKind::dirac, value, 0.0};
    }
    static PgfComponent poisson(double w, double mean) {
        return {w, PgfKind::poisson, 0, mean};
    }
};

namespace pgf_detail {

// Shared by MixturePGF and the simulator's scratch-buffer fast path so both
// produce bit-identical draws.  Validates components, requires the raw
// weights to sum to 1 within 1e-9, renormalizes exactly to total weight 1,
// and drops zero-weight components.
void validate_and_normalize(std::vector<PgfComponent>& comps);

double eval_components(std::span<const PgfComponent> comps, double s);
double mean_components(std::span<const PgfComponent> comps);
std::uint64_t sample_components(std::span<const PgfComponent> comps, RngStream& rng);
std::uint64_t iid_sum_components(std::span<const PgfComponent> comps, std::uint64_t n,
                                 RngStream& rng);

}  // namespace pgf_detail

class MixturePGF {
  public:
    explicit MixturePGF(std::vector<PgfComponent> components)
        : components_(std::move(components)) {
        pgf_detail::validate_and_normalize(components_);
    }

    static MixturePGF dirac(std::uint32_t value) {
        return MixturePGF({PgfComponent::dirac(1.0, value)});
    }

    const std::vector<PgfComponent>& components() const { return components_; }

  private:
    std::vector<PgfComponent> components_;
};

// Generating function value at s in [0, 1] (domain error outside).
double pgf_eval(const MixturePGF& law, double s);

// First moment of the mixture.
double pgf_mean(const MixturePGF& law);

// One draw from the law.
std::uint64_t pgf_sample(const MixturePGF& law, RngStream& rng);

// Sum of n i.i.d. draws in O(#components) time: multinomial split of n over
// the components (sequential conditional binomials), then one aggregated draw
// per component.  Throws std::overflow_error if the sum would exceed 2^62.
std::uint64_t iid_sum_sample(const MixturePGF& law, std::uint64_t n, RngStream& rng);

// pgf_eval(law, s)^e for real exponent e >= 0, evaluated as exp(e*log(...))
// with a guarded branch at pgf_eval == 0.
double pgf_power_eval(const MixturePGF& law, double s, double exponent);

inline constexpr std::uint64_t kPopulationCap = std::uint64_t{1} << 62;

}  // namespace cbdi
