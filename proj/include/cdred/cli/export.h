#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cdred::cli {

struct ExportStats {
  std::size_t long_rows = 0;
  std::size_t summary_rows = 0;
  std::vector<std::uint64_t> config_hashes;  // distinct, in first-seen order
};

// Hash of a run's config.cfg with the seed removed, so seeds of one
// configuration share a group.
std::uint64_t config_group_hash(const std::string& run_dir);

// Writes <out>/metrics_long.csv (run, step, metric, value) and
// <out>/metrics_summary.csv (config_hash, metric, step, mean, std, n),
// std taken over runs sharing a config hash.
ExportStats export_plots(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace cdred::cli
