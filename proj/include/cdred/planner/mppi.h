#pragma once

#include <vector>

#include "cdred/common/types.h"

namespace cdred::planner {

// What the planner needs from a learned model. All matrices are batched
// column-wise.
class LatentModel {
 public:
  virtual ~LatentModel() = default;
  virtual int action_dim() const = 0;
  virtual Matrix encode(const Matrix& obs) const = 0;
  virtual Matrix next(const Matrix& z, const Matrix& a) const = 0;
  virtual Vector reward(const Matrix& z, const Matrix& a) const = 0;
  virtual Vector value(const Matrix& z, const Matrix& a) const = 0;
  virtual Matrix policy_action(const Matrix& z, Rng& rng) const = 0;
};

struct PlannerConfig {
  int horizon = 3;
  int samples = 512;
  int policy_samples = 24;
  int iterations = 6;
  int elites = 64;
  double temperature = 0.5;
  double min_std = 0.05;
  double max_std = 2.0;
  double gamma = 0.99;

  void validate() const;
};

// Per-step Gaussian over action sequences, action_dim x horizon.
struct PlanSolution {
  Matrix mean;
  Matrix std;

  bool empty() const { return mean.size() == 0; }
  int horizon() const { return static_cast<int>(mean.cols()); }
};

PlanSolution initial_solution(int action_dim, const PlannerConfig& config);

// One-step left shift of the mean, last step set to 0; std restarts at max_std.
PlanSolution shift_solution(const PlanSolution& previous, const PlannerConfig& config);

enum class PlanMode { kEval, kExplore };

struct PlanTelemetry {
  std::vector<double> elite_mean;  // per iteration
  std::vector<double> elite_max;
  double final_std_norm = 0.0;
  int discarded = 0;  // non-finite samples over all iterations
};

struct PlanResult {
  Vector action;
  PlanSolution solution;
  PlanTelemetry telemetry;
};

// Returns of N candidate sequences from one latent z0 (latent x 1):
//   sum_{t<H} gamma^t R(z_t, a_t) + gamma^H Q(z_H, a_H),  a_H ~ pi(z_H).
// `actions[t]` is action_dim x N.
Vector estimate_returns(const LatentModel& model, const Matrix& z0,
                        const std::vector<Matrix>& actions, double gamma, Rng& rng);

// Single sequence, action_dim x H.
double estimate_return(const LatentModel& model, const Matrix& z0, const Matrix& actions,
                       double gamma, Rng& rng);

// Refines the sequence distribution for `config.iterations` rounds and
// returns the first action. Throws NumericalError when no candidate has a
// finite return.
PlanResult plan(const LatentModel& model, const Vector& obs, const PlanSolution* warm_start,
                const PlannerConfig& config, PlanMode mode, Rng& rng);

}  // namespace cdred::planner
