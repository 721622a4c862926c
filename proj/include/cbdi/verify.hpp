// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbdi/construct.hpp"
#include "cbdi/ensemble.hpp"
#include "cbdi/mechanism.hpp"

namespace cbdi {

// Exact one-generation generator of the level-k chain applied to
// e_l(x) = exp(-l*x) at integer state i:
//   A_k e_l(i/k) = gamma_k * [ g_k(s)^i * h_k^{(i)}(g_k(s)) - exp(-l*i/k) ],
// with s = exp(-l/k).  Evaluated through the two-term split
//   B_k = gamma_k * g^i * (h(g) - 1),   C_k = gamma_k * (g^i - exp(-l*x)),
// whose sum equals the bracket identically.
double Ak_exp(const ScaledModel& model, double lambda, std::uint64_t state);

struct GapRow {
    double lambda;
    double x;
    double Ak;
    double L;
    double gap;
    double Bk;
    double Ck;
    double weighted_Ck;  // exp(l0*x) * |Ck - x*exp(-l*x)*R(l)|, l0 = scale * l
};

struct GapReport {
    std::uint64_t k;
    double lambda0_scale;
    std::vector<GapRow> rows;
    double sup_gap;
};

// Tabulates A_k against the limit generator L on a (lambda, x) grid.  Every
// x must lie on the level-k lattice {i/k} (domain error otherwise).
GapReport generator_gap(const ScaledModel& model, std::span<const double> lambda_grid,
                        std::span<const double> x_grid, double lambda0_scale = 0.5);

struct ConditionRow {
    std::uint64_t k;
    double sup_Rk_minus_R;    // condition on the branching kernel
    double lipschitz_Rk;      // grid Lipschitz constant of R_k on the lambda grid
    double sup_Fk_minus_F;    // condition on the immigration kernel
    double eq_mean_residual;  // |gamma_k * (1 - mean g_k) - b|
    double growth_min_margin; // min of K1*(1+x) - (gamma_k/k)*mean h^{(floor(kx))}
    double fbound_min_margin; // min of K1*l*(1+x) - |F_k(l, x)|
};

struct ConditionReport {
    std::vector<ConditionRow> rows;
};

ConditionReport condition_report(std::span<const ScaledModel> models,
                                 std::span<const double> lambda_grid,
                                 std::span<const double> x_grid);

struct MomentRow {
    double t;
    double empirical_mean;
    double se;
    double bound;
    bool pass;  // empirical_mean - 3*se <= bound
};

// First-moment bound for the level-k chain after n = floor(gamma_k * t)
// generations:  with G = (1 + K2/gamma)(1 + K1/gamma),
//   E[Y_k(t)] <= G^n * y0 + (K1/gamma) * (G^n - 1)/(G - 1),
// the second factor degenerating to n when K1 = K2 = 0.
std::vector<MomentRow> moment_bound_check(const ScaledModel& model, const Ensemble& ens);

struct MartingaleRow {
    std::uint64_t n;
    double mean;
    double se;
    bool pass;  // |mean| <= 4*se
};

// Monte Carlo check that
//   M(n) = gamma_k*(e^{-l Y(n)} - e^{-l Y(0)}) - sum_{i<n} A_k e_l(Y(i))
// is centered at every checkpoint (generation indices, ascending).
std::vector<MartingaleRow> martingale_residual(const ScaledModel& model, double lambda,
                                               double y0, std::int64_t n_paths,
                                               std::span<const std::uint64_t> checkpoints,
                                               std::uint64_t master_seed,
                                               int workers = 0);

// Closed-form Laplace transform of the zero-drift limit process with constant
// immigration drift beta and no jumps:
//   E[e^{-l Y_t}] = exp(-y0*l/(1+c*l*t)) * (1+c*l*t)^(-beta/c),  c > 0.
double cbi_laplace_oracle(double c, double beta, double y0, double t, double lambda);

struct LaplaceCell {
    double t;
    double lambda;
    double lt_a;
    double lt_b;
    double diff;
    double se;  // pooled standard error (0 for an exact reference side)
    bool pass;  // |diff| <= max(3*se, bias_budget)
};

// Empirical transform comparison between two ensembles on matching t grids.
std::vector<LaplaceCell> laplace_compare(const Ensemble& a, const Ensemble& b,
                                         std::span<const double> lambda_grid,
                                         double bias_budget);

// Empirical transform of `a` against the closed-form reference above.
std::vector<LaplaceCell> laplace_vs_oracle(const Ensemble& a, double c, double beta,
                                           std::span<const double> lambda_grid,
                                           double bias_budget);

struct KsResult {
    double d;
    double p;
};

// Two-sample Kolmogorov-Smirnov test.  D is computed on a joint merge that
// steps over tied values on both sides at once; the p-value uses the
// asymptotic Kolmogorov distribution when both samples have >= 50 points and
// a permutation test (1e4 permutations, fixed internal seed) below that.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Bernstein smoothing of p(exp(-x)) for a polynomial p with p(0) = 0:
//   f_n(x) = sum_{r=1}^{n} C(n,r) p(r/n) e^{-rx} (1-e^{-x})^{n-r},
// returned expanded in the e^{-jx} basis.  The expansion coefficients are
// C(n,j) * (j-th forward difference of p on the grid {0, 1/n, ..., 1}),
// which vanish exactly beyond deg(p), so polynomials of low degree stay
// numerically exact for every n.  Requires deg(p) <= n.
ExpPolynomial bernstein_approx(std::span<const double> p_coeffs, std::uint64_t n);

struct BernsteinRow {
    std::uint64_t n;
    double err_f;    // sup |f_n - f| on the grid
    double err_df;   // sup |f_n' - f'|
    double err_d2f;  // sup |f_n'' - f''|
};

std::vector<BernsteinRow> bernstein_report(std::span<const double> p_coeffs,
                                           std::span<const std::uint64_t> n_list,
                                           std::span<const double> x_grid);

}  // namespace cbdi
