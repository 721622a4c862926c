// SPDX-License-Identifier: Apache-2.0
#include "cbdi/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cbdi/expmath.hpp"

namespace cbdi {

FiniteAtomicMeasure::FiniteAtomicMeasure(std::vector<MeasureAtom> atoms)
    : atoms_(std::move(atoms)) {
    std::ostringstream err;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
        const auto& a = atoms_[j];
        if (!std::isfinite(a.site) || a.site <= 0.0)
            err << "  - atom " << j << ": site must be positive\n";
        if (j > 0 && !(a.site > atoms_[j - 1].site))
            err << "  - atom " << j << ": sites must be strictly increasing\n";
        if (!std::isfinite(a.weight) || a.weight < 0.0)
            err << "  - atom " << j << ": weight must be nonnegative\n";
    }
    const std::string msg = err.str();
    if (!msg.empty()) throw std::invalid_argument("invalid atomic measure:\n" + msg);
}

double FiniteAtomicMeasure::moment(int p) const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight * std::pow(a.site, p);
    return s;
}

void validate(const BranchingMechanism& mech) {
    std::ostringstream err;
    if (!std::isfinite(mech.b)) err << "  - b must be finite\n";
    if (!std::isfinite(mech.c) || mech.c < 0.0) err << "  - c must be >= 0\n";
    const std::string msg = err.str();
    if (!msg.empty()) throw std::invalid_argument("invalid branching mechanism:\n" + msg);
}

void validate(const ImmigrationMechanism& imm) {
    std::ostringstream err;
    for (std::size_t j = 0; j < imm.atoms.size(); ++j) {
        const auto& a = imm.atoms[j];
        if (!std::isfinite(a.z) || a.z <= 0.0)
            err << "  - immigration atom " << j << ": z must be positive\n";
        if (!std::isfinite(a.pi) || a.pi < 0.0)
            err << "  - immigration atom " << j << ": pi must be nonnegative\n";
    }
    const std::string msg = err.str();
    if (!msg.empty())
        throw std::invalid_argument("invalid immigration mechanism:\n" + msg);
}

ExpPolynomial::ExpPolynomial(std::vector<ExpTerm> terms) {
    for (const auto& t : terms) {
        if (!std::isfinite(t.coeff) || !std::isfinite(t.rate) || t.rate < 0.0)
            throw std::invalid_argument(
                "exponential polynomial needs finite coefficients and rates >= 0");
    }
    std::sort(terms.begin(), terms.end(),
              [](const ExpTerm& a, const ExpTerm& b) { return a.rate < b.rate; });
    for (const auto& t : terms) {
        if (!terms_.empty() && terms_.back().rate == t.rate)
            terms_.back().coeff += t.coeff;
        else
            terms_.push_back(t);
    }
    std::erase_if(terms_, [](const ExpTerm& t) { return t.coeff == 0.0; });
}

double ExpPolynomial::eval(double x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.coeff * std::exp(-t.rate * x);
    return s;
}

ExpPolynomial ExpPolynomial::derivative() const {
    std::vector<ExpTerm> d;
    d.reserve(terms_.size());
    for (const auto& t : terms_) d.push_back({-t.rate * t.coeff, t.rate});
    return ExpPolynomial(std::move(d));
}

double R_eval(const BranchingMechanism& mech, double lambda) {
    if (!(lambda >= 0.0)) throw std::domain_error("R requires lambda >= 0");
    if (lambda == 0.0) return 0.0;
    double r = mech.b * lambda + mech.c * lambda * lambda;
    for (const auto& a : mech.m.atoms()) r += a.weight * expm1_plus(lambda * a.site);
    return r;
}

double F_eval(const ImmigrationMechanism& imm, double lambda, double x) {
    if (!(lambda >= 0.0)) throw std::domain_error("F requires lambda >= 0");
    if (!(x >= 0.0)) throw std::domain_error("F requires x >= 0");
    if (lambda == 0.0) return 0.0;
    double f = -imm.beta(x) * lambda;
    for (const auto& a : imm.atoms)
        f += std::expm1(-lambda * a.z) * a.q(x) * a.pi;
    return f;
}

double generator_exp(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                     double lambda, double x) {
    const double e = std::exp(-lambda * x);
    return x * e * R_eval(mech, lambda) + e * F_eval(imm, lambda, x);
}

double generator_apply(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                       const ExpPolynomial& f, double x) {
    double s = 0.0;
    for (const auto& t : f.terms()) {
        if (t.rate == 0.0) continue;
        s += t.coeff * generator_exp(mech, imm, t.rate, x);
    }
    return s;
}

double growth_constant(const ImmigrationMechanism& imm) {
    // G(x) = beta(x) + sum_j q_j(x) z_j pi_j is piecewise linear, so the
    // ratio G(x)/(1+x) attains its sup at a breakpoint of G or in the tail
    // limit, which equals the combined tail slope.
    auto G = [&imm](double x) {
        double g = imm.beta(x);
        for (const auto& a : imm.atoms) g += a.q(x) * a.z * a.pi;
        return g;
    };
    std::vector<double> bps = imm.beta.breakpoints();
    for (const auto& a : imm.atoms)
        bps.insert(bps.end(), a.q.breakpoints().begin(), a.q.breakpoints().end());
    double K = imm.beta.tail_slope();
    for (const auto& a : imm.atoms) K += a.q.tail_slope() * a.z * a.pi;
    for (double x : bps) K = std::max(K, G(x) / (1.0 + x));
    if (!std::isfinite(K))
        throw std::runtime_error("immigration growth ratio is unbounded");
    return K;
}

double lipschitz_constant(const ImmigrationMechanism& imm) {
    double lip = imm.beta.lipschitz();
    for (const auto& a : imm.atoms) lip += a.q.lipschitz() * a.z * a.pi;
    return lip;
}

}  // namespace cbdi
