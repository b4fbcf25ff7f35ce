#include "cdred/cli/export.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "cdred/common/error.h"
#include "cdred/train/config.h"
#include "cdred/train/metrics.h"

namespace cdred::cli {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Accumulator {
  std::vector<double> values;
};

}  // namespace

std::uint64_t config_group_hash(const std::string& run_dir) {
  train::TrainConfig c = train::load_config((fs::path(run_dir) / "config.cfg").string());
  c.seed = 0;
  return c.hash();
}

ExportStats export_plots(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream lng(fs::path(out_dir) / "metrics_long.csv");
  if (!lng) throw FormatError("cannot write " + out_dir + "/metrics_long.csv");
  lng << "run,step,metric,value\n";

  ExportStats stats;
  // config hash -> metric -> step -> values across runs
  std::map<std::uint64_t, std::map<std::string, std::map<std::int64_t, Accumulator>>> groups;
  for (const auto& dir : run_dirs) {
    const train::MetricsTable table = train::read_metrics((fs::path(dir) / "metrics.csv").string());
    const std::uint64_t h = config_group_hash(dir);
    if (std::find(stats.config_hashes.begin(), stats.config_hashes.end(), h) ==
        stats.config_hashes.end()) {
      stats.config_hashes.push_back(h);
    }
    const std::string run = fs::path(dir).filename().string();
    for (const auto& row : table.rows) {
      const auto step = static_cast<std::int64_t>(row[0]);
      for (std::size_t c = 1; c < table.columns.size(); ++c) {
        lng << run << ',' << step << ',' << table.columns[c] << ',' << num(row[c]) << '\n';
        ++stats.long_rows;
        if (!std::isnan(row[c])) groups[h][table.columns[c]][step].values.push_back(row[c]);
      }
    }
  }

  std::ofstream sum(fs::path(out_dir) / "metrics_summary.csv");
  if (!sum) throw FormatError("cannot write " + out_dir + "/metrics_summary.csv");
  sum << "config_hash,metric,step,mean,std,n\n";
  for (const auto& [h, metrics] : groups) {
    for (const auto& [metric, steps] : metrics) {
      for (const auto& [step, acc] : steps) {
        const auto n = static_cast<double>(acc.values.size());
        double mean = 0.0;
        for (double v : acc.values) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : acc.values) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / n);
        char hash[20];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(h));
        sum << hash << ',' << metric << ',' << step << ',' << num(mean) << ',' << num(sd) << ','
            << acc.values.size() << '\n';
        ++stats.summary_rows;
      }
    }
  }
  return stats;
}

}  // namespace cdred::cli
