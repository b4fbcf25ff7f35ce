#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "cdred/common/types.h"

namespace cdred::train {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct MetricsRow {
  std::int64_t step = 0;
  double episode_return_eval_mean = kMissing;
  double episode_return_eval_std = kMissing;
  double model_loss = kMissing;
  double consistency_loss = kMissing;
  double td_loss = kMissing;
  double cdred_loss = kMissing;
  double policy_loss = kMissing;
  double reward_expert_mean = kMissing;
  double reward_behavioral_mean = kMissing;
  double grad_norm_mean = kMissing;
  double grad_norm_max = kMissing;
  double lr = kMissing;
};

const std::vector<std::string>& metrics_columns();
std::string metrics_header();
// Values printed with 17 significant digits so rows compare bit-exactly.
std::string format_row(const MetricsRow& row);
std::vector<double> row_values(const MetricsRow& row);

// Append-only CSV owner. Writes the header when the file is created.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const MetricsRow& row);

 private:
  std::ofstream out_;
};

// Parses a metrics CSV back into (column names, rows of values).
struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
MetricsTable read_metrics(const std::string& path);

// Running mean and max of gradient L2 norms over one logging window.
class GradNormWindow {
 public:
  void add(double norm);
  void add(const Vector& gradient) { add(gradient.norm()); }
  double mean() const;
  double max() const;
  std::int64_t count() const { return count_; }
  void reset();

 private:
  double sum_ = 0.0;
  double max_ = 0.0;
  std::int64_t count_ = 0;
};

// Mean over a window, NaN entries skipped; NaN when nothing was added.
class RunningMean {
 public:
  void add(double v);
  double mean() const;
  void reset();

 private:
  double sum_ = 0.0;
  std::int64_t count_ = 0;
};

}  // namespace cdred::train
