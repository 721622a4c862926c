// SPDX-License-Identifier: Apache-2.0
#include "cbdi/construct.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cbdi {

double gamma_min(const BranchingMechanism& mech, std::uint64_t k) {
    validate(mech);
    if (k < 1) throw std::domain_error("scale level k must be >= 1");
    for (const auto& a : mech.m.atoms()) {
        if (static_cast<double>(k) * a.site < 1.0)
            throw std::domain_error(
                "scale level too coarse: k * z must be >= 1 for every jump atom");
    }
    const double b_plus = std::max(mech.b, 0.0);
    const double b_minus = std::max(-mech.b, 0.0);
    double g = b_plus + b_minus + 2.0 * mech.c * static_cast<double>(k);
    for (const auto& a : mech.m.atoms()) g += a.weight * a.site;
    return std::max(1.0, g);
}

MixturePGF build_offspring(const BranchingMechanism& mech, std::uint64_t k,
                           double gamma) {
    const double floor_gamma = gamma_min(mech, k);
    if (!(gamma >= floor_gamma)) {
        std::ostringstream err;
        err << "offspring normalization " << gamma << " is below the admissible floor "
            << floor_gamma;
        throw std::invalid_argument(err.str());
    }
    const double kd = static_cast<double>(k);
    const double b_plus = std::max(mech.b, 0.0);
    const double b_minus = std::max(-mech.b, 0.0);

    double w0 = b_plus + mech.c * kd;
    for (const auto& a : mech.m.atoms()) w0 += a.weight * (a.site - 1.0 / kd);
    w0 /= gamma;
    const double w2 = (mech.c * kd + b_minus) / gamma;

    std::vector<PgfComponent> comps;
    comps.reserve(3 + mech.m.size());
    double used = w0 + w2;
    comps.push_back(PgfComponent::dirac(w0, 0));
    comps.push_back(PgfComponent::dirac(0.0, 1));  // weight patched below
    comps.push_back(PgfComponent::dirac(w2, 2));
    for (const auto& a : mech.m.atoms()) {
        const double wj = a.weight / (kd * gamma);
        used += wj;
        comps.push_back(PgfComponent::poisson(wj, kd * a.site));
    }
    comps[1].weight = 1.0 - used;
    return MixturePGF(std::move(comps));
}

ControlFamily::ControlFamily(ImmigrationMechanism imm, std::uint64_t k, double K_hat)
    : imm_(std::move(imm)), k_(k), K_hat_(K_hat) {
    validate(imm_);
    if (k_ < 1) throw std::domain_error("scale level k must be >= 1");
    const double K1 = growth_constant(imm_);
    if (!(K_hat_ >= 2.0 * K1)) {
        std::ostringstream err;
        err << "control constant " << K_hat_ << " is below 2 * growth constant ("
            << 2.0 * K1 << ")";
        throw std::invalid_argument(err.str());
    }
    const double kd = static_cast<double>(k_);
    sqrt_k_ = std::sqrt(kd);
    gamma_hat_ = K_hat_ * kd * sqrt_k_;

    // sup over [0, k] of sum_j pi_j q_j(x); piecewise linear, so the sup sits
    // at a breakpoint or at x = k.
    double sup = 0.0;
    auto rate_sum = [this](double x) {
        double s = 0.0;
        for (const auto& a : imm_.atoms) s += a.pi * a.q(x);
        return s;
    };
    for (const auto& a : imm_.atoms) {
        for (double bp : a.q.breakpoints())
            if (bp <= kd) sup = std::max(sup, rate_sum(bp));
    }
    sup = std::max(sup, rate_sum(kd));
    gamma_tilde_ = std::max(1.0, sup);
    gamma_total_ = gamma_tilde_ + gamma_hat_;

    atom_mean_.reserve(imm_.atoms.size());
    for (const auto& a : imm_.atoms) atom_mean_.push_back(kd * a.z);
}

void ControlFamily::set_gamma_total(double gamma_total) {
    if (!(gamma_total >= gamma_tilde_ + gamma_hat_))
        throw std::invalid_argument("control mass cannot shrink below tilde + hat");
    gamma_total_ = gamma_total;
}

void ControlFamily::components_at(std::uint64_t state,
                                  std::vector<PgfComponent>& out) const {
    out.clear();
    const double kd = static_cast<double>(k_);
    const double x = static_cast<double>(state) / kd;

    double w1 = 0.0, w2 = 0.0;
    if (x <= sqrt_k_) {
        const double a =
            gamma_hat_ > 0.0 ? imm_.beta(x) / (3.0 * sqrt_k_ * K_hat_) : 0.0;
        if (a > 0.5)
            throw std::logic_error("up/double-up control weight exceeds half its block mass");
        const double scale = gamma_hat_ / gamma_total_;
        w1 = a * scale;
        w2 = a * scale;
    }
    double rest = 1.0 - w1 - w2;
    out.push_back(PgfComponent::dirac(0.0, 0));  // weight patched below
    out.push_back(PgfComponent::dirac(w1, 1));
    out.push_back(PgfComponent::dirac(w2, 2));
    if (x <= kd) {
        for (std::size_t j = 0; j < imm_.atoms.size(); ++j) {
            const double wj =
                imm_.atoms[j].pi * imm_.atoms[j].q(x) / gamma_total_;
            rest -= wj;
            out.push_back(PgfComponent::poisson(wj, atom_mean_[j]));
        }
    }
    out[0].weight = rest;
    pgf_detail::validate_and_normalize(out);
}

MixturePGF ControlFamily::law_at(std::uint64_t state) const {
    std::vector<PgfComponent> comps;
    components_at(state, comps);
    return MixturePGF(std::move(comps));
}

ControlFamily build_control(const ImmigrationMechanism& imm, std::uint64_t k,
                            double K_hat) {
    return ControlFamily(imm, k, K_hat);
}

ScaledModel build_scaled_model(const BranchingMechanism& mech,
                               const ImmigrationMechanism& imm, std::uint64_t k,
                               std::optional<double> K_hat_override) {
    validate(mech);
    validate(imm);
    const double K1 = growth_constant(imm);
    const double K_hat = K_hat_override.value_or(2.0 * K1);
    ControlFamily control = build_control(imm, k, K_hat);
    const double floor_gamma = gamma_min(mech, k);
    const double gamma_k =
        std::max(floor_gamma, control.gamma_tilde() + control.gamma_hat());
    control.set_gamma_total(gamma_k);
    MixturePGF offspring = build_offspring(mech, k, gamma_k);
    ConstructionCertificate cert{k,
                                 gamma_k,
                                 floor_gamma,
                                 control.gamma_tilde(),
                                 control.gamma_hat(),
                                 K_hat,
                                 K1,
                                 std::fabs(mech.b)};
    return ScaledModel{k,          gamma_k, std::move(offspring), std::move(control),
                       mech,       imm,     cert};
}

double Rk_eval(const ScaledModel& model, double lambda) {
    const double kd = static_cast<double>(model.k);
    if (!(lambda >= 0.0) || !(lambda <= kd))
        throw std::domain_error("Rk is defined for lambda in [0, k]");
    const double s = 1.0 - lambda / kd;
    return kd * model.gamma_k * (pgf_eval(model.offspring, s) - s);
}

double Fk_eval(const ScaledModel& model, double lambda, double x) {
    const double kd = static_cast<double>(model.k);
    if (!(lambda >= 0.0) || !(lambda <= kd))
        throw std::domain_error("Fk is defined for lambda in [0, k]");
    if (!(x >= 0.0)) throw std::domain_error("Fk requires x >= 0");
    if (lambda == 0.0) return 0.0;
    const auto state = static_cast<std::uint64_t>(std::floor(kd * x));
    const MixturePGF law = model.control.law_at(state);
    return model.gamma_k * (pgf_eval(law, 1.0 - lambda / kd) - 1.0);
}

double uk_eval(const ScaledModel& model, double lambda) {
    if (!(lambda >= 0.0)) throw std::domain_error("uk requires lambda >= 0");
    const double kd = static_cast<double>(model.k);
    return kd * (1.0 - pgf_eval(model.offspring, std::exp(-lambda / kd)));
}

}  // namespace cbdi
