#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thirdgrade/diagnostics.hpp"

namespace thirdgrade {

// Monte Carlo run description. Path i is keyed by (seed, i); the seed here
// replaces cfg.run.seed.
struct EnsembleSpec {
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  Config config;
  std::filesystem::path dir;
  int sample_stride = 10;
  int workers = 1;
};

struct EnsembleResult {
  EnsembleReport report;
  AuditResult audit;
  std::vector<PathSummary> paths;  // in path-index order
  std::size_t computed = 0;        // paths integrated by this call
};

// Layout of `dir`:
//   manifest.json     seed, n_paths, config_hash, stride, config text
//   path_<i>.jsonl    header line, one sample per stride, summary line
//   report.csv        name,value,bound,margin,stderr
//   report.json       summary
// Path files are written to a temporary name and renamed when complete, so
// an interruption loses at most the paths in flight. Throws IoError.
EnsembleResult run_ensemble(const EnsembleSpec& spec);

// Completes the missing path files of a previous run in `spec.dir`. Throws
// ManifestCorrupt if the manifest is missing or its seed, path count or
// config hash disagree with `spec`.
EnsembleResult resume(const EnsembleSpec& spec);

// Rebuilds the report from the path files alone (all must be present).
EnsembleResult reaggregate(const EnsembleSpec& spec);

std::filesystem::path path_file(const std::filesystem::path& dir, std::size_t index);

// One JSON object per line: a header {seed, path, config_hash}, then
// {t, v_norm, w_tilde, w24, theta, tau_M_hit, energy_residual, frozen_v_norm}
// per sample, then {"summary": {...}} with the PathSummary fields.
void write_trajectory_jsonl(const TrajectoryRecord& rec, std::uint64_t config_hash,
                            std::ostream& out);
// Parses the summary line of a path file; nullopt if the file is incomplete.
std::optional<PathSummary> read_path_summary(const std::filesystem::path& file);

}  // namespace thirdgrade
