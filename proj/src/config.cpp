// SPDX-License-Identifier: Apache-2.0
#include "cbdi/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cbdi/hash.hpp"

namespace cbdi {

namespace {

using nlohmann::json;

std::string real17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class Parser {
  public:
    explicit Parser(const json& root) : root_(root) {}

    ExperimentConfig run() {
        ExperimentConfig cfg;
        parse_branching(cfg);
        parse_immigration(cfg);
        parse_scaling(cfg);
        parse_simulation(cfg);
        parse_verification(cfg);
        parse_bernstein(cfg);
        if (!errs_.empty()) {
            std::string msg = "invalid configuration:";
            for (const auto& e : errs_) msg += "\n  - " + e;
            throw ConfigError(msg);
        }
        snap_times(cfg);
        cfg.fingerprint = fnv1a64(canonical_string(cfg));
        return cfg;
    }

  private:
    const json& root_;
    std::vector<std::string> errs_;

    void fail(const std::string& where, const std::string& what) {
        errs_.push_back(where + ": " + what);
    }

    const json* section(const char* name, bool required) {
        if (!root_.contains(name)) {
            if (required) fail(name, "section missing");
            return nullptr;
        }
        if (!root_[name].is_object()) {
            fail(name, "must be an object");
            return nullptr;
        }
        return &root_[name];
    }

    bool number_at(const json& j, const std::string& where, const char* key,
                   double& out, bool required = true) {
        if (!j.contains(key)) {
            if (required) fail(where + "." + key, "missing");
            return false;
        }
        if (!j[key].is_number()) {
            fail(where + "." + key, "must be a number");
            return false;
        }
        out = j[key].get<double>();
        if (!std::isfinite(out)) {
            fail(where + "." + key, "must be finite");
            return false;
        }
        return true;
    }

    bool real_list_at(const json& j, const std::string& where, const char* key,
                      std::vector<double>& out, bool required = true) {
        if (!j.contains(key)) {
            if (required) fail(where + "." + key, "missing");
            return false;
        }
        if (!j[key].is_array()) {
            fail(where + "." + key, "must be an array of numbers");
            return false;
        }
        out.clear();
        for (const auto& v : j[key]) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                fail(where + "." + key, "must contain only finite numbers");
                return false;
            }
            out.push_back(v.get<double>());
        }
        return true;
    }

    bool pl_at(const json& j, const std::string& where, const char* key,
               PiecewiseLinearFn& out, bool required = true) {
        if (!j.contains(key)) {
            if (required) fail(where + "." + key, "missing");
            return false;
        }
        const std::string here = where + "." + key;
        if (!j[key].is_object()) {
            fail(here, "must be an object with breakpoints/values/tail_slope");
            return false;
        }
        std::vector<double> bp, vals;
        double tail = 0.0;
        bool ok = real_list_at(j[key], here, "breakpoints", bp);
        ok = real_list_at(j[key], here, "values", vals) && ok;
        ok = number_at(j[key], here, "tail_slope", tail) && ok;
        if (!ok) return false;
        try {
            out = PiecewiseLinearFn(std::move(bp), std::move(vals), tail);
        } catch (const std::invalid_argument& e) {
            fail(here, e.what());
            return false;
        }
        return true;
    }

    void parse_branching(ExperimentConfig& cfg) {
        const json* s = section("branching", true);
        if (s == nullptr) return;
        number_at(*s, "branching", "b", cfg.branching.b);
        number_at(*s, "branching", "c", cfg.branching.c);
        if (cfg.branching.c < 0.0) fail("branching.c", "must be >= 0");
        if (!s->contains("m_atoms")) return;
        if (!(*s)["m_atoms"].is_array()) {
            fail("branching.m_atoms", "must be an array of [site, weight] pairs");
            return;
        }
        std::vector<MeasureAtom> atoms;
        bool shape_ok = true;
        for (const auto& pair : (*s)["m_atoms"]) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
                !pair[1].is_number()) {
                fail("branching.m_atoms", "must be an array of [site, weight] pairs");
                shape_ok = false;
                break;
            }
            atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
        if (!shape_ok) return;
        try {
            cfg.branching.m = FiniteAtomicMeasure(std::move(atoms));
        } catch (const std::invalid_argument& e) {
            fail("branching.m_atoms", e.what());
        }
    }

    void parse_immigration(ExperimentConfig& cfg) {
        const json* s = section("immigration", true);
        if (s == nullptr) return;
        pl_at(*s, "immigration", "beta", cfg.immigration.beta);
        if (!s->contains("atoms")) return;
        if (!(*s)["atoms"].is_array()) {
            fail("immigration.atoms", "must be an array");
            return;
        }
        std::size_t idx = 0;
        for (const auto& a : (*s)["atoms"]) {
            const std::string here = "immigration.atoms[" + std::to_string(idx) + "]";
            ++idx;
            if (!a.is_object()) {
                fail(here, "must be an object with z, pi, q");
                continue;
            }
            ImmigrationAtom atom{0.0, 0.0, PiecewiseLinearFn::zero()};
            bool ok = number_at(a, here, "z", atom.z);
            ok = number_at(a, here, "pi", atom.pi) && ok;
            ok = pl_at(a, here, "q", atom.q) && ok;
            if (ok && atom.z <= 0.0) {
                fail(here + ".z", "must be positive");
                ok = false;
            }
            if (ok && atom.pi < 0.0) {
                fail(here + ".pi", "must be >= 0");
                ok = false;
            }
            if (ok) cfg.immigration.atoms.push_back(std::move(atom));
        }
    }

    void parse_scaling(ExperimentConfig& cfg) {
        const json* s = section("scaling", true);
        if (s == nullptr) return;
        if (!s->contains("k_list") || !(*s)["k_list"].is_array() ||
            (*s)["k_list"].empty()) {
            fail("scaling.k_list", "must be a nonempty array of integers >= 1");
        } else {
            for (const auto& v : (*s)["k_list"]) {
                if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1) {
                    fail("scaling.k_list", "must contain only integers >= 1");
                    cfg.k_list.clear();
                    break;
                }
                cfg.k_list.push_back(v.get<std::uint64_t>());
            }
            for (std::size_t i = 1; i < cfg.k_list.size(); ++i) {
                if (cfg.k_list[i] <= cfg.k_list[i - 1]) {
                    fail("scaling.k_list", "must be strictly increasing");
                    break;
                }
            }
        }
        if (s->contains("K_hat")) {
            double kh;
            if (number_at(*s, "scaling", "K_hat", kh)) {
                if (kh <= 0.0)
                    fail("scaling.K_hat", "must be positive");
                else
                    cfg.K_hat = kh;
            }
        }
    }

    void parse_simulation(ExperimentConfig& cfg) {
        const json* s = section("simulation", true);
        if (s == nullptr) return;
        number_at(*s, "simulation", "y0", cfg.y0);
        if (cfg.y0 < 0.0) fail("simulation.y0", "must be >= 0");
        if (real_list_at(*s, "simulation", "t_grid", cfg.t_grid)) {
            if (cfg.t_grid.empty()) fail("simulation.t_grid", "must be nonempty");
            for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
                if (cfg.t_grid[i] < 0.0) {
                    fail("simulation.t_grid", "times must be >= 0");
                    break;
                }
                if (i > 0 && cfg.t_grid[i] < cfg.t_grid[i - 1]) {
                    fail("simulation.t_grid", "times must be nondecreasing");
                    break;
                }
            }
        }
        number_at(*s, "simulation", "dt", cfg.dt);
        if (!(cfg.dt > 0.0)) fail("simulation.dt", "must be positive");
        if (!s->contains("n_paths") || !(*s)["n_paths"].is_number_integer() ||
            (*s)["n_paths"].get<std::int64_t>() < 1) {
            fail("simulation.n_paths", "must be an integer >= 1");
        } else {
            cfg.n_paths = (*s)["n_paths"].get<std::int64_t>();
        }
        if (!s->contains("master_seed") || !(*s)["master_seed"].is_number_unsigned()) {
            fail("simulation.master_seed", "must be an unsigned integer");
        } else {
            cfg.master_seed = (*s)["master_seed"].get<std::uint64_t>();
        }
    }

    void parse_verification(ExperimentConfig& cfg) {
        const json* s = section("verification", true);
        if (s == nullptr) return;
        auto grid = [&](const char* key, std::vector<double>& out) {
            if (!real_list_at(*s, "verification", key, out)) return;
            const std::string here = std::string("verification.") + key;
            if (out.empty()) fail(here, "must be nonempty");
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (out[i] < 0.0) {
                    fail(here, "entries must be >= 0");
                    break;
                }
                if (i > 0 && out[i] <= out[i - 1]) {
                    fail(here, "entries must be strictly increasing");
                    break;
                }
            }
        };
        grid("lambda_grid", cfg.lambda_grid);
        grid("x_grid", cfg.x_grid);
        if (!s->contains("tolerances")) return;
        const json& t = (*s)["tolerances"];
        if (!t.is_object()) {
            fail("verification.tolerances", "must be an object");
            return;
        }
        number_at(t, "verification.tolerances", "mean_residual",
                  cfg.tol.mean_residual, false);
        number_at(t, "verification.tolerances", "identity", cfg.tol.identity, false);
        number_at(t, "verification.tolerances", "bias_budget", cfg.tol.bias_budget,
                  false);
        number_at(t, "verification.tolerances", "ks_p_min", cfg.tol.ks_p_min, false);
        if (cfg.tol.mean_residual <= 0.0 || cfg.tol.identity <= 0.0 ||
            cfg.tol.bias_budget <= 0.0 || cfg.tol.ks_p_min <= 0.0)
            fail("verification.tolerances", "all tolerances must be positive");
    }

    void parse_bernstein(ExperimentConfig& cfg) {
        if (!root_.contains("bernstein")) return;
        const json* s = section("bernstein", false);
        if (s == nullptr) return;
        if (real_list_at(*s, "bernstein", "p_coeffs", cfg.bernstein.p_coeffs, false)) {
            if (cfg.bernstein.p_coeffs.empty() || cfg.bernstein.p_coeffs[0] != 0.0)
                fail("bernstein.p_coeffs", "constant term must be 0");
        }
        if (s->contains("n_list")) {
            if (!(*s)["n_list"].is_array() || (*s)["n_list"].empty()) {
                fail("bernstein.n_list", "must be a nonempty array of integers >= 1");
            } else {
                cfg.bernstein.n_list.clear();
                for (const auto& v : (*s)["n_list"]) {
                    if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1) {
                        fail("bernstein.n_list", "must contain only integers >= 1");
                        break;
                    }
                    cfg.bernstein.n_list.push_back(v.get<std::uint64_t>());
                }
            }
        }
        number_at(*s, "bernstein", "x_max", cfg.bernstein.x_max, false);
        number_at(*s, "bernstein", "x_step", cfg.bernstein.x_step, false);
        if (cfg.bernstein.x_max <= 0.0 || cfg.bernstein.x_step <= 0.0)
            fail("bernstein", "x_max and x_step must be positive");
    }

    void snap_times(ExperimentConfig& cfg) {
        for (auto& t : cfg.t_grid) {
            const double steps = t / cfg.dt;
            const double snapped = std::round(steps) * cfg.dt;
            if (std::fabs(t - snapped) > 1e-9 * std::max(1.0, std::fabs(t))) {
                cfg.warnings.push_back("t = " + real17(t) +
                                       " is not a multiple of dt; snapped to " +
                                       real17(snapped));
                t = snapped;
            }
        }
    }
};

void append_pl(std::ostringstream& out, const char* name, const PiecewiseLinearFn& f) {
    out << name << "(";
    for (std::size_t i = 0; i < f.breakpoints().size(); ++i)
        out << real17(f.breakpoints()[i]) << ":" << real17(f.values()[i]) << ",";
    out << "tail=" << real17(f.tail_slope()) << ")";
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("configuration parse error: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("configuration root must be an object");
    return Parser(root).run();
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open configuration file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string canonical_string(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "b=" << real17(cfg.branching.b) << ";c=" << real17(cfg.branching.c) << ";m=[";
    for (const auto& a : cfg.branching.m.atoms())
        out << real17(a.site) << ":" << real17(a.weight) << ",";
    out << "];";
    append_pl(out, "beta=", cfg.immigration.beta);
    out << ";atoms=[";
    for (const auto& a : cfg.immigration.atoms) {
        out << "{z=" << real17(a.z) << ",pi=" << real17(a.pi) << ",";
        append_pl(out, "q=", a.q);
        out << "},";
    }
    out << "];k=[";
    for (auto k : cfg.k_list) out << k << ",";
    out << "];K_hat=" << (cfg.K_hat ? real17(*cfg.K_hat) : "default");
    out << ";y0=" << real17(cfg.y0) << ";t=[";
    for (double t : cfg.t_grid) out << real17(t) << ",";
    out << "];dt=" << real17(cfg.dt) << ";n_paths=" << cfg.n_paths
        << ";seed=" << cfg.master_seed << ";lambda=[";
    for (double l : cfg.lambda_grid) out << real17(l) << ",";
    out << "];x=[";
    for (double x : cfg.x_grid) out << real17(x) << ",";
    out << "];tol=[" << real17(cfg.tol.mean_residual) << ","
        << real17(cfg.tol.identity) << "," << real17(cfg.tol.bias_budget) << ","
        << real17(cfg.tol.ks_p_min) << "];bernstein={p=[";
    for (double p : cfg.bernstein.p_coeffs) out << real17(p) << ",";
    out << "];n=[";
    for (auto n : cfg.bernstein.n_list) out << n << ",";
    out << "];x_max=" << real17(cfg.bernstein.x_max)
        << ";x_step=" << real17(cfg.bernstein.x_step) << "}";
    return out.str();
}

}  // namespace cbdi
