// SPDX-License-Identifier: Apache-2.0
#include "cbdi/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cbdi/discrete_sim.hpp"
#include "cbdi/expmath.hpp"
#include "cbdi/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cbdi {

namespace {

struct AkSplit {
    double B;
    double C;
    double A;
};

AkSplit ak_split(const ScaledModel& model, double lambda, std::uint64_t state) {
    if (!(lambda >= 0.0)) throw std::domain_error("lambda must be >= 0");
    const double kd = static_cast<double>(model.k);
    const double u = lambda / kd;
    const double s = std::exp(-u);
    const double gs = pgf_eval(model.offspring, s);
    const double state_d = static_cast<double>(state);
    double P;
    if (state == 0) {
        P = 1.0;
    } else if (gs == 0.0) {
        P = 0.0;
    } else {
        const double log_gs = gs == s ? -u : std::log(gs);
        P = std::exp(state_d * log_gs);
    }
    const double H = pgf_eval(model.control.law_at(state), gs);
    const double E = std::exp(-(u * state_d));
    AkSplit split;
    split.B = model.gamma_k * P * (H - 1.0);
    split.C = model.gamma_k * (P - E);
    split.A = split.B + split.C;
    return split;
}

std::uint64_t lattice_state(std::uint64_t k, double x) {
    const double kx = static_cast<double>(k) * x;
    const double rounded = std::round(kx);
    if (std::fabs(kx - rounded) > 1e-9 * std::max(1.0, kx))
        throw std::domain_error("x must lie on the level-k lattice {i/k}");
    return static_cast<std::uint64_t>(rounded);
}

void mean_se(std::span<const double> v, double& mean, double& se) {
    const auto n = static_cast<double>(v.size());
    mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
    se = std::sqrt(var / n);
}

}  // namespace

double Ak_exp(const ScaledModel& model, double lambda, std::uint64_t state) {
    return ak_split(model, lambda, state).A;
}

GapReport generator_gap(const ScaledModel& model, std::span<const double> lambda_grid,
                        std::span<const double> x_grid, double lambda0_scale) {
    GapReport report;
    report.k = model.k;
    report.lambda0_scale = lambda0_scale;
    report.sup_gap = 0.0;
    report.rows.reserve(lambda_grid.size() * x_grid.size());
    for (double lambda : lambda_grid) {
        const double R = R_eval(model.mech, lambda);
        for (double x : x_grid) {
            const std::uint64_t state = lattice_state(model.k, x);
            const AkSplit split = ak_split(model, lambda, state);
            GapRow row;
            row.lambda = lambda;
            row.x = x;
            row.Ak = split.A;
            row.L = generator_exp(model.mech, model.imm, lambda, x);
            row.gap = std::fabs(row.Ak - row.L);
            row.Bk = split.B;
            row.Ck = split.C;
            row.weighted_Ck = std::exp(lambda0_scale * lambda * x) *
                              std::fabs(split.C - x * std::exp(-lambda * x) * R);
            report.sup_gap = std::max(report.sup_gap, row.gap);
            report.rows.push_back(row);
        }
    }
    return report;
}

ConditionReport condition_report(std::span<const ScaledModel> models,
                                 std::span<const double> lambda_grid,
                                 std::span<const double> x_grid) {
    ConditionReport report;
    report.rows.reserve(models.size());
    for (const auto& model : models) {
        ConditionRow row{};
        row.k = model.k;
        const double K1 = model.cert.K1;
        const double kd = static_cast<double>(model.k);

        double sup_R = 0.0, lip = 0.0;
        double prev_lambda = 0.0, prev_Rk = 0.0;
        bool have_prev = false;
        for (double lambda : lambda_grid) {
            const double Rk = Rk_eval(model, lambda);
            sup_R = std::max(sup_R, std::fabs(Rk - R_eval(model.mech, lambda)));
            if (have_prev && lambda > prev_lambda)
                lip = std::max(lip, std::fabs(Rk - prev_Rk) / (lambda - prev_lambda));
            prev_lambda = lambda;
            prev_Rk = Rk;
            have_prev = true;
        }
        row.sup_Rk_minus_R = sup_R;
        row.lipschitz_Rk = lip;

        double sup_F = 0.0;
        double fmargin = std::numeric_limits<double>::infinity();
        for (double lambda : lambda_grid) {
            for (double x : x_grid) {
                const double Fk = Fk_eval(model, lambda, x);
                sup_F = std::max(sup_F,
                                 std::fabs(Fk - F_eval(model.imm, lambda, x)));
                fmargin = std::min(fmargin,
                                   K1 * lambda * (1.0 + x) - std::fabs(Fk));
            }
        }
        row.sup_Fk_minus_F = sup_F;
        row.fbound_min_margin = fmargin;

        row.eq_mean_residual = std::fabs(
            model.gamma_k * (1.0 - pgf_mean(model.offspring)) - model.mech.b);

        double cmargin = std::numeric_limits<double>::infinity();
        for (double x : x_grid) {
            const auto state = static_cast<std::uint64_t>(std::floor(kd * x));
            const double mean_h = pgf_mean(model.control.law_at(state));
            cmargin = std::min(cmargin,
                               K1 * (1.0 + x) - model.gamma_k / kd * mean_h);
        }
        row.growth_min_margin = cmargin;
        report.rows.push_back(row);
    }
    return report;
}

std::vector<MomentRow> moment_bound_check(const ScaledModel& model, const Ensemble& ens) {
    const double gamma = model.gamma_k;
    const double K1 = model.cert.K1;
    const double K2 = model.cert.K2;
    const double G = (1.0 + K2 / gamma) * (1.0 + K1 / gamma);
    std::vector<MomentRow> rows;
    rows.reserve(ens.meta.t_grid.size());
    for (std::size_t ti = 0; ti < ens.meta.t_grid.size(); ++ti) {
        const double t = ens.meta.t_grid[ti];
        const double n = std::floor(gamma * t);
        const double Gn = std::pow(G, n);
        const double geometric = G > 1.0 ? (Gn - 1.0) / (G - 1.0) : n;
        MomentRow row;
        row.t = t;
        row.bound = Gn * ens.meta.y0 + (K1 / gamma) * geometric;
        mean_se(ens.samples[ti], row.empirical_mean, row.se);
        row.pass = row.empirical_mean - 3.0 * row.se <= row.bound;
        rows.push_back(row);
    }
    return rows;
}

std::vector<MartingaleRow> martingale_residual(const ScaledModel& model, double lambda,
                                               double y0, std::int64_t n_paths,
                                               std::span<const std::uint64_t> checkpoints,
                                               std::uint64_t master_seed, int workers) {
    if (checkpoints.empty()) throw std::invalid_argument("need at least one checkpoint");
    for (std::size_t i = 1; i < checkpoints.size(); ++i) {
        if (checkpoints[i] <= checkpoints[i - 1])
            throw std::invalid_argument("checkpoints must be strictly increasing");
    }
    if (n_paths < 2) throw std::invalid_argument("need at least two paths");
    const double kd = static_cast<double>(model.k);
    const auto z0 = static_cast<std::uint64_t>(std::floor(kd * y0));
    const std::uint64_t key = derive_stream_key(
        master_seed, stream_domain::discrete(model.k) ^ 0x6d617274696e67ull);
    const std::uint64_t horizon = checkpoints.back();

    std::vector<std::vector<double>> M(checkpoints.size());
    for (auto& v : M) v.resize(static_cast<std::size_t>(n_paths));

    const int nthreads = workers > 0 ? workers : 0;
    (void)nthreads;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) \
    num_threads(nthreads > 0 ? nthreads : omp_get_max_threads())
#endif
    for (std::int64_t p = 0; p < n_paths; ++p) {
        std::uint64_t z = z0;
        const double f0 = std::exp(-lambda * static_cast<double>(z0) / kd);
        double ak_sum = 0.0;
        std::size_t ci = 0;
        for (std::uint64_t gen = 0; gen < horizon && ci < checkpoints.size(); ++gen) {
            if (checkpoints[ci] == gen) {
                const double fn = std::exp(-lambda * static_cast<double>(z) / kd);
                M[ci][static_cast<std::size_t>(p)] =
                    model.gamma_k * (fn - f0) - ak_sum;
                ++ci;
            }
            ak_sum += Ak_exp(model, lambda, z);
            RngStream rng(key, static_cast<std::uint64_t>(p), gen);
            z = step(model, z, rng);
        }
        for (; ci < checkpoints.size(); ++ci) {
            // Checkpoints at or beyond the horizon (the last one lands here).
            const double fn = std::exp(-lambda * static_cast<double>(z) / kd);
            M[ci][static_cast<std::size_t>(p)] = model.gamma_k * (fn - f0) - ak_sum;
        }
    }

    std::vector<MartingaleRow> rows;
    rows.reserve(checkpoints.size());
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        MartingaleRow row;
        row.n = checkpoints[ci];
        mean_se(M[ci], row.mean, row.se);
        row.pass = std::fabs(row.mean) <= 4.0 * row.se ||
                   (row.mean == 0.0 && row.se == 0.0);
        rows.push_back(row);
    }
    return rows;
}

double cbi_laplace_oracle(double c, double beta, double y0, double t, double lambda) {
    if (!(c > 0.0)) throw std::domain_error("the closed form needs c > 0");
    if (!(beta >= 0.0) || !(y0 >= 0.0) || !(t >= 0.0) || !(lambda >= 0.0))
        throw std::domain_error("beta, y0, t and lambda must be >= 0");
    const double denom = 1.0 + c * lambda * t;
    return std::exp(-y0 * lambda / denom) * std::pow(denom, -beta / c);
}

namespace {

std::vector<LaplaceCell> laplace_cells(const Ensemble& a,
                                       std::span<const double> lambda_grid,
                                       double bias_budget,
                                       const std::function<double(double, double)>& ref,
                                       const Ensemble* b) {
    std::vector<LaplaceCell> cells;
    cells.reserve(a.meta.t_grid.size() * lambda_grid.size());
    for (std::size_t ti = 0; ti < a.meta.t_grid.size(); ++ti) {
        const double t = a.meta.t_grid[ti];
        for (double lambda : lambda_grid) {
            LaplaceCell cell;
            cell.t = t;
            cell.lambda = lambda;

            std::vector<double> ea(a.samples[ti].size());
            for (std::size_t i = 0; i < ea.size(); ++i)
                ea[i] = std::exp(-lambda * a.samples[ti][i]);
            double se_a;
            mean_se(ea, cell.lt_a, se_a);

            double se_b = 0.0;
            if (b != nullptr) {
                std::vector<double> eb(b->samples[ti].size());
                for (std::size_t i = 0; i < eb.size(); ++i)
                    eb[i] = std::exp(-lambda * b->samples[ti][i]);
                mean_se(eb, cell.lt_b, se_b);
            } else {
                cell.lt_b = ref(t, lambda);
            }
            cell.diff = cell.lt_a - cell.lt_b;
            cell.se = std::sqrt(se_a * se_a + se_b * se_b);
            cell.pass = std::fabs(cell.diff) <= std::max(3.0 * cell.se, bias_budget);
            cells.push_back(cell);
        }
    }
    return cells;
}

}  // namespace

std::vector<LaplaceCell> laplace_compare(const Ensemble& a, const Ensemble& b,
                                         std::span<const double> lambda_grid,
                                         double bias_budget) {
    if (a.meta.t_grid.size() != b.meta.t_grid.size())
        throw std::invalid_argument("ensembles record different time grids");
    for (std::size_t i = 0; i < a.meta.t_grid.size(); ++i) {
        if (std::fabs(a.meta.t_grid[i] - b.meta.t_grid[i]) > 1e-12)
            throw std::invalid_argument("ensembles record different time grids");
    }
    return laplace_cells(a, lambda_grid, bias_budget, {}, &b);
}

std::vector<LaplaceCell> laplace_vs_oracle(const Ensemble& a, double c, double beta,
                                           std::span<const double> lambda_grid,
                                           double bias_budget) {
    auto ref = [c, beta, &a](double t, double lambda) {
        return cbi_laplace_oracle(c, beta, a.meta.y0, t, lambda);
    };
    return laplace_cells(a, lambda_grid, bias_budget, ref, nullptr);
}

namespace {

double ks_statistic(std::vector<double>& a, std::vector<double>& b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na -
                                  static_cast<double>(j) / nb));
    }
    return d;
}

// Asymptotic Kolmogorov tail Q(x) = P(sup |B| > x), via Marsaglia's two
// series: a theta-function form below 1.18, the alternating tail above.
double kolmogorov_q(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.18) {
        const double t = std::exp(-3.141592653589793 * 3.141592653589793 /
                                  (8.0 * x * x));
        const double p = std::sqrt(2.0 * 3.141592653589793) / x *
                         (t + std::pow(t, 9.0) + std::pow(t, 25.0) +
                          std::pow(t, 49.0));
        return std::max(0.0, std::min(1.0, 1.0 - p));
    }
    double q = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * std::exp(-2.0 * j * j * x * x);
        q += (j % 2 == 1) ? term : -term;
        if (term < 1e-14) break;
    }
    return std::max(0.0, std::min(1.0, q));
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("KS needs nonempty samples");
    std::vector<double> xa(a.begin(), a.end());
    std::vector<double> xb(b.begin(), b.end());
    KsResult res;
    res.d = ks_statistic(xa, xb);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    if (a.size() >= 50 && b.size() >= 50) {
        const double ne = na * nb / (na + nb);
        res.p = kolmogorov_q(std::sqrt(ne) * res.d);
        return res;
    }
    // Permutation p-value on the pooled sample (fixed internal seed).
    constexpr int kPerms = 10000;
    std::vector<double> pool(xa.size() + xb.size());
    std::copy(xa.begin(), xa.end(), pool.begin());
    std::copy(xb.begin(), xb.end(), pool.begin() + xa.size());
    const std::uint64_t key = derive_stream_key(0x6b735f7065726dull,
                                                stream_domain::generic());
    int ge = 0;
    std::vector<double> pa(xa.size()), pb(xb.size());
    for (int perm = 0; perm < kPerms; ++perm) {
        RngStream rng(key, static_cast<std::uint64_t>(perm), 0);
        std::vector<double> shuffled = pool;
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(
                rng.next_double() * static_cast<double>(i + 1));
            std::swap(shuffled[i], shuffled[std::min(j, i)]);
        }
        pa.assign(shuffled.begin(), shuffled.begin() + xa.size());
        pb.assign(shuffled.begin() + xa.size(), shuffled.end());
        if (ks_statistic(pa, pb) >= res.d) ++ge;
    }
    res.p = (1.0 + ge) / (1.0 + kPerms);
    return res;
}

ExpPolynomial bernstein_approx(std::span<const double> p_coeffs, std::uint64_t n) {
    if (n < 1) throw std::domain_error("polynomial order must be >= 1");
    if (p_coeffs.empty() || p_coeffs[0] != 0.0)
        throw std::invalid_argument("the smoothed polynomial must satisfy p(0) = 0");
    std::size_t deg = 0;
    for (std::size_t i = 0; i < p_coeffs.size(); ++i)
        if (p_coeffs[i] != 0.0) deg = i;
    if (deg > n)
        throw std::invalid_argument("polynomial degree must not exceed the order n");
    if (deg == 0) return ExpPolynomial{};

    // j-th forward difference of p at 0 over the step-1/n grid, in closed
    // form: the monomial u^i contributes (1/n)^i * j! * S(i, j) with S the
    // Stirling partition numbers, which is exactly zero for j > i.  A
    // numeric difference table would instead carry rounding noise that the
    // binomial factors amplify catastrophically at large n.
    std::vector<std::vector<double>> stirling(deg + 1,
                                              std::vector<double>(deg + 1, 0.0));
    stirling[0][0] = 1.0;
    for (std::size_t i = 1; i <= deg; ++i)
        for (std::size_t j = 1; j <= i; ++j)
            stirling[i][j] = static_cast<double>(j) * stirling[i - 1][j] +
                             stirling[i - 1][j - 1];

    const double h = 1.0 / static_cast<double>(n);
    std::vector<double> h_pow(deg + 1, 1.0);
    for (std::size_t i = 1; i <= deg; ++i) h_pow[i] = h_pow[i - 1] * h;

    std::vector<ExpTerm> terms;
    terms.reserve(deg);
    double binom = 1.0;  // C(n, j), exact while below 2^53
    double log_binom = 0.0;
    double jfact = 1.0;
    for (std::size_t j = 1; j <= deg; ++j) {
        const double nj = static_cast<double>(n - j + 1);
        binom = binom * nj / static_cast<double>(j);
        log_binom += std::log(nj) - std::log(static_cast<double>(j));
        jfact *= static_cast<double>(j);
        double delta = 0.0;
        for (std::size_t i = j; i <= deg; ++i)
            delta += p_coeffs[i] * h_pow[i] * stirling[i][j];
        delta *= jfact;
        double coeff;
        if (std::isfinite(binom)) {
            coeff = binom * delta;
        } else if (delta == 0.0) {
            coeff = 0.0;
        } else {
            // Orders large enough to overflow the direct product: combine
            // magnitudes in log space.
            coeff = std::copysign(std::exp(log_binom + std::log(std::fabs(delta))),
                                  delta);
        }
        terms.push_back({coeff, static_cast<double>(j)});
    }
    return ExpPolynomial(std::move(terms));
}

std::vector<BernsteinRow> bernstein_report(std::span<const double> p_coeffs,
                                           std::span<const std::uint64_t> n_list,
                                           std::span<const double> x_grid) {
    // Derivatives of f(x) = p(exp(-x)) through the chain rule with y = e^-x:
    //   f'  = -y p'(y),   f'' = y p'(y) + y^2 p''(y).
    auto poly_eval = [](std::span<const double> c, double u) {
        double v = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) v = v * u + c[i];
        return v;
    };
    std::vector<double> dp, d2p;
    for (std::size_t i = 1; i < p_coeffs.size(); ++i)
        dp.push_back(static_cast<double>(i) * p_coeffs[i]);
    for (std::size_t i = 1; i < dp.size(); ++i)
        d2p.push_back(static_cast<double>(i) * dp[i]);

    std::vector<BernsteinRow> rows;
    rows.reserve(n_list.size());
    for (std::uint64_t n : n_list) {
        const ExpPolynomial fn = bernstein_approx(p_coeffs, n);
        const ExpPolynomial dfn = fn.derivative();
        const ExpPolynomial d2fn = dfn.derivative();
        BernsteinRow row{n, 0.0, 0.0, 0.0};
        for (double x : x_grid) {
            const double y = std::exp(-x);
            const double f = poly_eval(p_coeffs, y);
            const double df = -y * poly_eval(dp, y);
            const double d2f = y * poly_eval(dp, y) + y * y * poly_eval(d2p, y);
            row.err_f = std::max(row.err_f, std::fabs(fn.eval(x) - f));
            row.err_df = std::max(row.err_df, std::fabs(dfn.eval(x) - df));
            row.err_d2f = std::max(row.err_d2f, std::fabs(d2fn.eval(x) - d2f));
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace cbdi
