#include "cdred/planner/mppi.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cdred/common/error.h"

namespace cdred::planner {

void PlannerConfig::validate() const {
  if (horizon < 1) throw ConfigError("planner horizon must be >= 1");
  if (samples < 0 || policy_samples < 0) throw ConfigError("planner sample counts must be >= 0");
  if (samples + policy_samples < 1) throw ConfigError("planner needs at least one sample");
  if (iterations < 1) throw ConfigError("planner iterations must be >= 1");
  if (elites < 1) throw ConfigError("planner elites must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("planner temperature must be > 0");
  if (min_std < 0.0 || max_std < min_std) throw ConfigError("planner std bounds invalid");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("planner gamma outside [0, 1]");
}

PlanSolution initial_solution(int action_dim, const PlannerConfig& config) {
  PlanSolution s;
  s.mean = Matrix::Zero(action_dim, config.horizon);
  s.std = Matrix::Constant(action_dim, config.horizon, config.max_std);
  return s;
}

PlanSolution shift_solution(const PlanSolution& previous, const PlannerConfig& config) {
  PlanSolution s;
  const auto ad = previous.mean.rows();
  const auto h = previous.mean.cols();
  s.mean = Matrix::Zero(ad, h);
  if (h > 1) s.mean.leftCols(h - 1) = previous.mean.rightCols(h - 1);
  s.std = Matrix::Constant(ad, h, config.max_std);
  return s;
}

Vector estimate_returns(const LatentModel& model, const Matrix& z0,
                        const std::vector<Matrix>& actions, double gamma, Rng& rng) {
  if (actions.empty()) throw ContractError("estimate_returns: empty action sequence");
  const auto n = actions[0].cols();
  Matrix z = z0.replicate(1, n);
  Vector total = Vector::Zero(n);
  double discount = 1.0;
  for (const Matrix& a : actions) {
    total += discount * model.reward(z, a);
    z = model.next(z, a);
    discount *= gamma;
  }
  const Matrix terminal_action = model.policy_action(z, rng);
  total += discount * model.value(z, terminal_action);
  return total;
}

double estimate_return(const LatentModel& model, const Matrix& z0, const Matrix& actions,
                       double gamma, Rng& rng) {
  std::vector<Matrix> seq;
  for (Eigen::Index t = 0; t < actions.cols(); ++t) seq.emplace_back(actions.col(t));
  return estimate_returns(model, z0, seq, gamma, rng)(0);
}

PlanResult plan(const LatentModel& model, const Vector& obs, const PlanSolution* warm_start,
                const PlannerConfig& config, PlanMode mode, Rng& rng) {
  config.validate();
  const int ad = model.action_dim();
  const int h = config.horizon;
  const int n_gauss = config.samples;
  const int n_pi = config.policy_samples;
  const int total = n_gauss + n_pi;

  PlanResult result;
  PlanSolution& sol = result.solution;
  if (warm_start != nullptr && !warm_start->empty()) {
    if (warm_start->mean.rows() != ad || warm_start->horizon() != h) {
      throw DimensionError("plan: warm start shape mismatch");
    }
    sol = *warm_start;
  } else {
    sol = initial_solution(ad, config);
  }

  const Matrix z0 = model.encode(obs);

  // Policy-prior rollouts stay fixed across iterations.
  std::vector<Matrix> pi_actions;
  if (n_pi > 0) {
    Matrix z = z0.replicate(1, n_pi);
    for (int t = 0; t < h; ++t) {
      pi_actions.push_back(model.policy_action(z, rng).cwiseMax(-1.0).cwiseMin(1.0));
      z = model.next(z, pi_actions.back());
    }
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> actions(static_cast<std::size_t>(h), Matrix(ad, total));
  for (int t = 0; t < h; ++t) {
    if (n_pi > 0) actions[static_cast<std::size_t>(t)].rightCols(n_pi) = pi_actions[static_cast<std::size_t>(t)];
  }

  for (int iter = 0; iter < config.iterations; ++iter) {
    for (int t = 0; t < h; ++t) {
      Matrix& a = actions[static_cast<std::size_t>(t)];
      for (int j = 0; j < n_gauss; ++j) {
        for (int d = 0; d < ad; ++d) {
          const double v = sol.mean(d, t) + sol.std(d, t) * normal(rng);
          a(d, j) = std::clamp(v, -1.0, 1.0);
        }
      }
    }
    const Vector returns = estimate_returns(model, z0, actions, config.gamma, rng);

    std::vector<int> finite;
    finite.reserve(static_cast<std::size_t>(total));
    for (int j = 0; j < total; ++j) {
      if (std::isfinite(returns(j))) finite.push_back(j);
    }
    result.telemetry.discarded += total - static_cast<int>(finite.size());
    if (finite.empty()) {
      std::ostringstream msg;
      msg << "plan: all " << total << " return estimates non-finite at iteration " << iter
          << " (obs finite: " << (obs.allFinite() ? "yes" : "no")
          << ", latent finite: " << (z0.allFinite() ? "yes" : "no") << ")";
      throw NumericalError(msg.str());
    }
    const int k = std::min(config.elites, static_cast<int>(finite.size()));
    std::partial_sort(finite.begin(), finite.begin() + k, finite.end(),
                      [&](int x, int y) { return returns(x) > returns(y); });
    const double best = returns(finite[0]);
    Vector w(k);
    double elite_sum = 0.0;
    for (int e = 0; e < k; ++e) {
      const double r = returns(finite[static_cast<std::size_t>(e)]);
      elite_sum += r;
      w(e) = std::exp((r - best) / config.temperature);
    }
    w /= w.sum();
    result.telemetry.elite_mean.push_back(elite_sum / k);
    result.telemetry.elite_max.push_back(best);

    for (int t = 0; t < h; ++t) {
      const Matrix& a = actions[static_cast<std::size_t>(t)];
      Vector mu = Vector::Zero(ad);
      for (int e = 0; e < k; ++e) mu += w(e) * a.col(finite[static_cast<std::size_t>(e)]);
      Vector var = Vector::Zero(ad);
      for (int e = 0; e < k; ++e) {
        var += w(e) * (a.col(finite[static_cast<std::size_t>(e)]) - mu).array().square().matrix();
      }
      sol.mean.col(t) = mu.cwiseMax(-1.0).cwiseMin(1.0);
      sol.std.col(t) = var.cwiseSqrt().cwiseMax(config.min_std).cwiseMin(config.max_std);
    }
  }

  result.telemetry.final_std_norm = sol.std.norm();
  if (mode == PlanMode::kEval) {
    result.action = sol.mean.col(0);
  } else {
    result.action.resize(ad);
    for (int d = 0; d < ad; ++d) {
      result.action(d) = std::clamp(sol.mean(d, 0) + sol.std(d, 0) * normal(rng), -1.0, 1.0);
    }
  }
  return result;
}

}  // namespace cdred::planner
