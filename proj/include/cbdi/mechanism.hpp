// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cbdi/piecewise_linear.hpp"

namespace cbdi {

// Finite atomic measure on (0, inf): strictly increasing sites z_j > 0 with
// weights w_j >= 0.
struct MeasureAtom {
    double site;
    double weight;
};

class FiniteAtomicMeasure {
  public:
    FiniteAtomicMeasure() = default;
    explicit FiniteAtomicMeasure(std::vector<MeasureAtom> atoms);

    const std::vector<MeasureAtom>& atoms() const { return atoms_; }
    bool empty() const { return atoms_.empty(); }
    std::size_t size() const { return atoms_.size(); }

    // sum_j w_j * site_j^p
    double moment(int p) const;

  private:
    std::vector<MeasureAtom> atoms_;
};

// Branching triplet (b, c, m): linear drift coefficient b (any sign),
// diffusion coefficient c >= 0, and a finite atomic jump measure m.
// The branching kernel is
//   R(l) = b*l + c*l^2 + sum_j (exp(-l*z_j) - 1 + l*z_j) * m_j.
struct BranchingMechanism {
    double b = 0.0;
    double c = 0.0;
    FiniteAtomicMeasure m;
};

// State-dependent immigration: a drift rate beta(x) plus jump atoms, where
// atom j contributes jumps of size z_j at rate pi_j * q_j(x).  The kernel is
//   F(l, x) = -beta(x)*l + sum_j (exp(-l*z_j) - 1) * q_j(x) * pi_j  (<= 0).
struct ImmigrationAtom {
    double z;
    double pi;
    PiecewiseLinearFn q;
};

struct ImmigrationMechanism {
    PiecewiseLinearFn beta = PiecewiseLinearFn::zero();
    std::vector<ImmigrationAtom> atoms;
};

// Validates c >= 0 for the branching triplet and z > 0, pi >= 0 per
// immigration atom; throws std::invalid_argument listing every violation.
void validate(const BranchingMechanism& mech);
void validate(const ImmigrationMechanism& imm);

// Linear combination of decaying exponentials sum_i a_i * exp(-r_i * x) with
// rates r_i >= 0.  Terms are kept canonical: sorted by rate, equal rates
// merged, zero coefficients dropped.
struct ExpTerm {
    double coeff;
    double rate;
};

class ExpPolynomial {
  public:
    ExpPolynomial() = default;
    explicit ExpPolynomial(std::vector<ExpTerm> terms);

    const std::vector<ExpTerm>& terms() const { return terms_; }
    double eval(double x) const;

    // d/dx and d^2/dx^2, exact on the exponential basis.
    ExpPolynomial derivative() const;

  private:
    std::vector<ExpTerm> terms_;
};

// R(l) for l >= 0; R(0) == 0 exactly and the jump term uses a
// cancellation-free evaluation of exp(-u) - 1 + u.
double R_eval(const BranchingMechanism& mech, double lambda);

// F(l, x) for l >= 0, x >= 0; F(0, x) == 0 exactly and F <= 0 throughout.
double F_eval(const ImmigrationMechanism& imm, double lambda, double x);

// Limit generator applied to e_l(x) = exp(-l*x):
//   (L e_l)(x) = x * exp(-l*x) * R(l) + exp(-l*x) * F(l, x).
double generator_exp(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                     double lambda, double x);

// L applied term-by-term to an exponential polynomial; rate-0 terms are
// constants and map to 0.
double generator_apply(const BranchingMechanism& mech, const ImmigrationMechanism& imm,
                       const ExpPolynomial& f, double x);

// Minimal K with beta(x) + sum_j q_j(x) * z_j * pi_j <= K * (1 + x) on
// [0, inf), exact via the breakpoint structure.
double growth_constant(const ImmigrationMechanism& imm);

// Lip(beta) + sum_j Lip(q_j) * z_j * pi_j.
double lipschitz_constant(const ImmigrationMechanism& imm);

}  // namespace cbdi
