// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbdi/ensemble.hpp"

namespace cbdi {

inline constexpr const char* kVersion = "0.1.0";

// Shortest decimal form that parses back to exactly the same double
// (printf %.17g).  All CSV reals go through this.
std::string format_real(double x);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Sidecar path of a CSV: "runs/foo.csv" -> "runs/foo.meta.json".
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// Content hash binding an ensemble to its generating configuration: covers
// kind, k, gamma_k, dt, y0, t_grid, n_paths, seed, and the config hash.
std::uint64_t ensemble_fingerprint(const EnsembleMeta& meta, std::uint64_t config_hash);

// Writes "t,path,value" rows (time-major, path ascending) plus a metadata
// sidecar carrying the generating fields, the fingerprint, the library
// version, the wall time, and any load-time warnings.  Byte-identical for
// identical (meta, samples).
void write_ensemble(const std::filesystem::path& csv_path, const Ensemble& ens,
                    std::uint64_t config_hash, double wall_ms,
                    const std::vector<std::string>& warnings = {});

// Reads the CSV plus its sidecar, recomputes the fingerprint from the stored
// generating fields, and fails hard (std::runtime_error) when it does not
// match the stored one or when the CSV shape disagrees with the sidecar.
Ensemble read_ensemble(const std::filesystem::path& csv_path);

// One report table: fixed header, rows of preformatted cells.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Metadata sidecar for a report CSV (config hash, seed, version, wall time).
void write_report_sidecar(const std::filesystem::path& csv_path,
                          std::uint64_t config_hash, std::uint64_t seed,
                          double wall_ms,
                          const std::vector<std::string>& warnings = {});

}  // namespace cbdi
