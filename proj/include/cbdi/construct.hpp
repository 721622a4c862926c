// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cbdi/mechanism.hpp"
#include "cbdi/pgf.hpp"

namespace cbdi {

// Level-k discrete model.  States are integers i (population), the rescaled
// state is x = i/k, and one generation corresponds to 1/gamma_k units of
// rescaled time.  Each generation every one of i + psi(i) individuals
// reproduces independently with the offspring law g_k; psi(i) is drawn from
// the state-dependent control law h_k^{(i)}.

// Control family: a slow "tilde" part reproducing the jump immigration and a
// fast "hat" part reproducing the immigration drift beta.
//   tilde (active for i/k <= k):    Poisson(k*z_j) with weight pi_j q_j(i/k) / gamma,
//                                   remainder on Dirac(0);
//                                   gamma_tilde = max(1, sup_{x<=k} sum_j pi_j q_j(x)).
//   hat   (active for i/k <= sqrt(k)): Dirac(0/1/2) with weights (1-2a, a, a),
//                                   a = beta(i/k) / (3 sqrt(k) K_hat);
//                                   gamma_hat = K_hat * k^(3/2).
// The two parts are mixed in proportion gamma_tilde : gamma_hat : slack,
// where the slack (gamma_total - gamma_tilde - gamma_hat) sits on Dirac(0).
class ControlFamily {
  public:
    ControlFamily(ImmigrationMechanism imm, std::uint64_t k, double K_hat);

    std::uint64_t k() const { return k_; }
    double gamma_tilde() const { return gamma_tilde_; }
    double gamma_hat() const { return gamma_hat_; }
    double K_hat() const { return K_hat_; }
    double gamma_total() const { return gamma_total_; }

    // Raises the normalization mass; the extra weight lands on Dirac(0).
    void set_gamma_total(double gamma_total);

    // Control law at integer state i, as a full mixture object.
    MixturePGF law_at(std::uint64_t state) const;

    // Same weights written into a caller-owned buffer; the simulator reuses
    // one buffer across steps.  Produces exactly the components law_at wraps.
    void components_at(std::uint64_t state, std::vector<PgfComponent>& out) const;

    const ImmigrationMechanism& immigration() const { return imm_; }

  private:
    ImmigrationMechanism imm_;
    std::uint64_t k_;
    double K_hat_;
    double gamma_tilde_;
    double gamma_hat_;
    double gamma_total_;
    double sqrt_k_;
    std::vector<double> atom_mean_;  // k * z_j per immigration atom
};

struct ConstructionCertificate {
    std::uint64_t k;
    double gamma_k;
    double gamma_min;
    double gamma_tilde;
    double gamma_hat;
    double K_hat;
    double K1;  // growth constant of the immigration mechanism
    double K2;  // |b|
};

struct ScaledModel {
    std::uint64_t k;
    double gamma_k;
    MixturePGF offspring;
    ControlFamily control;
    BranchingMechanism mech;
    ImmigrationMechanism imm;
    ConstructionCertificate cert;
};

// Smallest admissible normalization for level k:
//   max(1, b+ + b- + 2*c*k + sum_j m_j * z_j),
// which keeps every offspring weight nonnegative and dominates the
// positivity floor |b| + 2*c*k + integral u*(1 - exp(-k*u)) m(du).
// Requires k >= 1 and k * min_j z_j >= 1 (std::domain_error otherwise).
double gamma_min(const BranchingMechanism& mech, std::uint64_t k);

// Offspring law at level k under normalization gamma:
//   Dirac(0):      [b+ + c*k + sum_j m_j (z_j - 1/k)] / gamma
//   Dirac(2):      [c*k + b-] / gamma
//   Poisson(k*z_j): m_j / (k * gamma)
//   Dirac(1):      remainder.
// Satisfies k*gamma*(g(1 - l/k) - (1 - l/k)) = R(l) + b- * l^2 / k on [0, k]
// and gamma*(1 - mean(g)) = b exactly.
MixturePGF build_offspring(const BranchingMechanism& mech, std::uint64_t k, double gamma);

// Requires K_hat >= 2 * growth_constant(imm) (std::invalid_argument below).
ControlFamily build_control(const ImmigrationMechanism& imm, std::uint64_t k,
                            double K_hat);

// Full level-k model: gamma_k = max(gamma_min, gamma_tilde + gamma_hat),
// offspring and control as above, plus the constants certificate.
// K_hat defaults to 2 * growth_constant(imm); an override must not be lower.
ScaledModel build_scaled_model(const BranchingMechanism& mech,
                               const ImmigrationMechanism& imm, std::uint64_t k,
                               std::optional<double> K_hat_override = std::nullopt);

// k * gamma_k * (g_k(1 - l/k) - (1 - l/k)); domain l in [0, k].
double Rk_eval(const ScaledModel& model, double lambda);

// gamma_k * (h_k^{(floor(k*x))}(1 - l/k) - 1); domain l in [0, k], x >= 0.
double Fk_eval(const ScaledModel& model, double lambda, double x);

// u_k(l) = k * (1 - g_k(exp(-l/k))); domain l >= 0.
double uk_eval(const ScaledModel& model, double lambda);

}  // namespace cbdi
