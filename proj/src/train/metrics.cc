#include "cdred/train/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cdred/common/error.h"

namespace cdred::train {
namespace {

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "step",           "episode_return_eval_mean", "episode_return_eval_std",
      "model_loss",     "consistency_loss",         "td_loss",
      "cdred_loss",     "policy_loss",              "reward_expert_mean",
      "reward_behavioral_mean", "grad_norm_mean",   "grad_norm_max",
      "lr"};
  return cols;
}

std::string metrics_header() {
  std::string out;
  for (const auto& c : metrics_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::vector<double> row_values(const MetricsRow& r) {
  return {static_cast<double>(r.step), r.episode_return_eval_mean, r.episode_return_eval_std,
          r.model_loss, r.consistency_loss, r.td_loss, r.cdred_loss, r.policy_loss,
          r.reward_expert_mean, r.reward_behavioral_mean, r.grad_norm_mean, r.grad_norm_max,
          r.lr};
}

std::string format_row(const MetricsRow& row) {
  std::string out = std::to_string(row.step);
  const auto values = row_values(row);
  for (std::size_t i = 1; i < values.size(); ++i) out += "," + format_value(values[i]);
  return out;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::app) {
  if (!out_) throw FormatError("cannot open metrics file " + path);
  out_.seekp(0, std::ios::end);
  if (out_.tellp() == 0) out_ << metrics_header() << '\n';
  out_.flush();
}

void MetricsWriter::write(const MetricsRow& row) {
  out_ << format_row(row) << '\n';
  out_.flush();
}

MetricsTable read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read metrics file " + path);
  MetricsTable table;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty metrics file " + path);
  std::istringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(cell == "nan" ? kMissing : std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("bad metrics value '" + cell + "' in " + path);
      }
    }
    if (row.size() != table.columns.size()) {
      throw FormatError("metrics row width mismatch in " + path);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void GradNormWindow::add(double norm) {
  sum_ += norm;
  max_ = count_ == 0 ? norm : std::max(max_, norm);
  ++count_;
}

double GradNormWindow::mean() const { return count_ == 0 ? 0.0 : sum_ / count_; }

double GradNormWindow::max() const { return max_; }

void GradNormWindow::reset() {
  sum_ = 0.0;
  max_ = 0.0;
  count_ = 0;
}

void RunningMean::add(double v) {
  if (std::isnan(v)) return;
  sum_ += v;
  ++count_;
}

double RunningMean::mean() const { return count_ == 0 ? kMissing : sum_ / count_; }

void RunningMean::reset() {
  sum_ = 0.0;
  count_ = 0;
}

}  // namespace cdred::train
