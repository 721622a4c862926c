// SPDX-License-Identifier: Apache-2.0
#include "cbdi/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cbdi/hash.hpp"

namespace cbdi {

namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json meta_to_json(const EnsembleMeta& meta) {
    json j;
    j["kind"] = meta.kind;
    j["k"] = meta.k;
    j["gamma_k"] = meta.gamma_k;
    j["dt"] = meta.dt;
    j["y0"] = meta.y0;
    j["t_grid"] = meta.t_grid;
    j["n_paths"] = meta.n_paths;
    j["seed"] = meta.seed;
    return j;
}

}  // namespace

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

std::uint64_t ensemble_fingerprint(const EnsembleMeta& meta, std::uint64_t config_hash) {
    std::ostringstream s;
    s << "kind=" << meta.kind << ";k=" << meta.k << ";gamma_k="
      << format_real(meta.gamma_k) << ";dt=" << format_real(meta.dt)
      << ";y0=" << format_real(meta.y0) << ";t=[";
    for (double t : meta.t_grid) s << format_real(t) << ",";
    s << "];n_paths=" << meta.n_paths << ";seed=" << meta.seed
      << ";config=" << hex64(config_hash);
    return fnv1a64(s.str());
}

void write_ensemble(const std::filesystem::path& csv_path, const Ensemble& ens,
                    std::uint64_t config_hash, double wall_ms,
                    const std::vector<std::string>& warnings) {
    if (ens.samples.size() != ens.meta.t_grid.size())
        throw std::invalid_argument("ensemble rows do not match the time grid");
    std::ostringstream out;
    out << "t,path,value\n";
    for (std::size_t ti = 0; ti < ens.samples.size(); ++ti) {
        const std::string t = format_real(ens.meta.t_grid[ti]);
        const auto& row = ens.samples[ti];
        for (std::size_t p = 0; p < row.size(); ++p)
            out << t << ',' << p << ',' << format_real(row[p]) << '\n';
    }
    write_text_file(csv_path, out.str());

    json j = meta_to_json(ens.meta);
    j["config_hash"] = hex64(config_hash);
    j["fingerprint"] = hex64(ensemble_fingerprint(ens.meta, config_hash));
    j["version"] = kVersion;
    j["wall_ms"] = wall_ms;
    if (!warnings.empty()) j["warnings"] = warnings;
    write_text_file(sidecar_path(csv_path), j.dump(2) + "\n");
}

Ensemble read_ensemble(const std::filesystem::path& csv_path) {
    const std::filesystem::path meta_path = sidecar_path(csv_path);
    json j;
    try {
        j = json::parse(read_text_file(meta_path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("unreadable sidecar " + meta_path.string() + ": " +
                                 e.what());
    }

    Ensemble ens;
    std::uint64_t stored_fp = 0;
    std::uint64_t config_hash = 0;
    try {
        ens.meta.kind = j.at("kind").get<std::string>();
        ens.meta.k = j.at("k").get<std::uint64_t>();
        ens.meta.gamma_k = j.at("gamma_k").get<double>();
        ens.meta.dt = j.at("dt").get<double>();
        ens.meta.y0 = j.at("y0").get<double>();
        ens.meta.t_grid = j.at("t_grid").get<std::vector<double>>();
        ens.meta.n_paths = j.at("n_paths").get<std::int64_t>();
        ens.meta.seed = j.at("seed").get<std::uint64_t>();
        stored_fp = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
        config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    } catch (const std::exception& e) {
        throw std::runtime_error("incomplete sidecar " + meta_path.string() + ": " +
                                 e.what());
    }
    ens.meta.fingerprint = ensemble_fingerprint(ens.meta, config_hash);
    if (ens.meta.fingerprint != stored_fp)
        throw std::runtime_error("fingerprint mismatch in " + meta_path.string() +
                                 ": the sidecar does not describe the data it "
                                 "claims to");

    ens.samples.assign(ens.meta.t_grid.size(), {});
    for (auto& row : ens.samples)
        row.reserve(static_cast<std::size_t>(ens.meta.n_paths));

    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + csv_path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,path,value")
        throw std::runtime_error("bad CSV header in " + csv_path.string());
    const auto per_time = static_cast<std::size_t>(ens.meta.n_paths);
    std::size_t ti = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("bad CSV row in " + csv_path.string() + ": " +
                                     line);
        while (ti < ens.samples.size() && ens.samples[ti].size() == per_time) ++ti;
        if (ti >= ens.samples.size())
            throw std::runtime_error("CSV has more rows than the sidecar describes");
        if (line.substr(0, c1) != format_real(ens.meta.t_grid[ti]))
            throw std::runtime_error("CSV time column disagrees with the sidecar at " +
                                     line.substr(0, c1));
        ens.samples[ti].push_back(std::strtod(line.c_str() + c2 + 1, nullptr));
    }
    for (std::size_t i = 0; i < ens.samples.size(); ++i) {
        if (ens.samples[i].size() != per_time)
            throw std::runtime_error("CSV row count disagrees with sidecar n_paths");
    }
    return ens;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("CSV row width disagrees with header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_report_sidecar(const std::filesystem::path& csv_path,
                          std::uint64_t config_hash, std::uint64_t seed,
                          double wall_ms, const std::vector<std::string>& warnings) {
    json j;
    j["config_hash"] = hex64(config_hash);
    j["seed"] = seed;
    j["version"] = kVersion;
    j["wall_ms"] = wall_ms;
    if (!warnings.empty()) j["warnings"] = warnings;
    write_text_file(sidecar_path(csv_path), j.dump(2) + "\n");
}

}  // namespace cbdi
