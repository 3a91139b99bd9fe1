#include "degen/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "degen/errors.hpp"

namespace degen {

double Trajectory::episode_return() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

void validate_trajectory(const Trajectory& traj) {
  if (traj.rewards.empty()) throw ShapeError("trajectory must have at least one step");
  if (traj.values.size() != traj.rewards.size() + 1) {
    throw ShapeError("trajectory needs T+1 values (got " + std::to_string(traj.values.size()) +
                     " for T=" + std::to_string(traj.rewards.size()) + ")");
  }
}

LevelScoreContext LevelScoreContext::from_rollouts(std::vector<Trajectory> rollouts,
                                                   bool history_solved) {
  LevelScoreContext ctx;
  ctx.ever_solved = history_solved;
  ctx.r_max = rollouts.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
  for (const auto& t : rollouts) {
    ctx.ever_solved = ctx.ever_solved || t.solved;
    ctx.r_max = std::max(ctx.r_max, t.episode_return());
  }
  ctx.rollouts = std::move(rollouts);
  return ctx;
}

Metric metric_from_string(std::string_view name) {
  if (name == "PVL" || name == "pvl") return Metric::PVL;
  if (name == "MaxMC" || name == "maxmc") return Metric::MaxMC;
  if (name == "MNA" || name == "mna") return Metric::MNA;
  if (name == "learnability" || name == "Learnability") return Metric::Learnability;
  throw UsageError("unknown metric '" + std::string(name) + "'");
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::PVL: return "PVL";
    case Metric::MaxMC: return "MaxMC";
    case Metric::MNA: return "MNA";
    case Metric::Learnability: return "learnability";
  }
  return "MNA";
}

std::vector<double> td_errors(const Trajectory& traj, double gamma) {
  validate_trajectory(traj);
  const int T = traj.length();
  std::vector<double> delta(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const auto i = static_cast<std::size_t>(t);
    delta[i] = traj.rewards[i] + gamma * traj.values[i + 1] - traj.values[i];
  }
  return delta;
}

namespace {

std::vector<double> clipped_advantages(const Trajectory& traj, double gamma, double lambda) {
  const std::vector<double> delta = td_errors(traj, gamma);
  std::vector<double> out(delta.size());
  double acc = 0.0;
  for (std::size_t i = delta.size(); i-- > 0;) {
    acc = delta[i] + lambda * gamma * acc;
    out[i] = std::max(0.0, acc);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void check_window(const Trajectory& traj, int t, int n) {
  validate_trajectory(traj);
  if (t < 0 || n < 0 || t + n > traj.length()) {
    throw IndexError("window t=" + std::to_string(t) + ", n=" + std::to_string(n) +
                     " exceeds T=" + std::to_string(traj.length()));
  }
}

}  // namespace

double pvl(const Trajectory& traj, double gamma, double lambda) {
  return mean(clipped_advantages(traj, gamma, lambda));
}

double maxmc(const Trajectory& traj, double r_max) {
  validate_trajectory(traj);
  const int T = traj.length();
  double s = 0.0;
  for (int t = 0; t < T; ++t) s += r_max - traj.values[static_cast<std::size_t>(t)];
  return s / T;
}

double v_max(const Trajectory& traj, int t, int n, double gamma) {
  check_window(traj, t, n);
  double best = traj.values[static_cast<std::size_t>(t)];
  double prefix = 0.0;
  double discount = 1.0;
  for (int m = 1; m <= n; ++m) {
    prefix += discount * traj.rewards[static_cast<std::size_t>(t + m - 1)];
    discount *= gamma;
    best = std::max(best, discount * traj.values[static_cast<std::size_t>(t + m)] + prefix);
  }
  return best;
}

double n_step_regret(const Trajectory& traj, int t, int n, double gamma) {
  check_window(traj, t, n);
  double best = traj.values[static_cast<std::size_t>(t)];
  double prefix = 0.0;
  double discount = 1.0;
  double candidate = best;
  for (int m = 1; m <= n; ++m) {
    prefix += discount * traj.rewards[static_cast<std::size_t>(t + m - 1)];
    discount *= gamma;
    candidate = discount * traj.values[static_cast<std::size_t>(t + m)] + prefix;
    best = std::max(best, candidate);
  }
  return best - candidate;
}

namespace {

// Shared sweep: for a fixed t, walk n = 1..T-t accumulating the n-step
// return, the running max and the lambda weights.
double lambda_regret_at(const Trajectory& traj, int t, double gamma, double lambda) {
  const int horizon = traj.length() - t;
  if (horizon <= 0) return 0.0;
  double best = traj.values[static_cast<std::size_t>(t)];
  double prefix = 0.0;
  double discount = 1.0;
  double weight = 1.0 - lambda;  // (1 - l) l^(n-1) at n = 1
  double total = 0.0;
  for (int n = 1; n <= horizon; ++n) {
    prefix += discount * traj.rewards[static_cast<std::size_t>(t + n - 1)];
    discount *= gamma;
    const double candidate = discount * traj.values[static_cast<std::size_t>(t + n)] + prefix;
    best = std::max(best, candidate);
    const double regret = best - candidate;
    if (n < horizon) {
      total += weight * regret;
      weight *= lambda;
    } else {
      total += std::pow(lambda, horizon - 1) * regret;
    }
  }
  return total;
}

}  // namespace

double lambda_regret(const Trajectory& traj, int t, double gamma, double lambda) {
  validate_trajectory(traj);
  if (t < 0 || t >= traj.length()) throw IndexError("lambda_regret index out of range");
  return lambda_regret_at(traj, t, gamma, lambda);
}

std::vector<double> lambda_regrets(const Trajectory& traj, double gamma, double lambda) {
  validate_trajectory(traj);
  std::vector<double> out(static_cast<std::size_t>(traj.length()));
  for (int t = 0; t < traj.length(); ++t) {
    out[static_cast<std::size_t>(t)] = lambda_regret_at(traj, t, gamma, lambda);
  }
  return out;
}

double mna(const LevelScoreContext& context, double gamma, double lambda) {
  if (context.rollouts.empty()) throw ShapeError("mna requires at least one rollout");
  if (!context.ever_solved) return 0.0;
  double total = 0.0;
  for (const auto& traj : context.rollouts) total += mean(lambda_regrets(traj, gamma, lambda));
  return total / static_cast<double>(context.rollouts.size());
}

double learnability(double success_rate) {
  if (!(success_rate >= 0.0 && success_rate <= 1.0)) {
    throw DomainError("success rate must lie in [0, 1]");
  }
  return success_rate * (1.0 - success_rate);
}

std::vector<double> per_step_scores(const Trajectory& traj, Metric metric, const ScoreParams& params,
                                    bool ever_solved, double r_max) {
  validate_trajectory(traj);
  switch (metric) {
    case Metric::MNA: {
      std::vector<double> g = lambda_regrets(traj, params.gamma, params.lambda);
      if (!ever_solved) std::fill(g.begin(), g.end(), 0.0);
      return g;
    }
    case Metric::PVL: return clipped_advantages(traj, params.gamma, params.lambda);
    case Metric::MaxMC: {
      std::vector<double> g(static_cast<std::size_t>(traj.length()));
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = r_max - traj.values[i];
      return g;
    }
    case Metric::Learnability:
      throw UsageError("learnability is an outcome score with no per-step decomposition");
  }
  return {};
}

double score_level(const LevelScoreContext& context, Metric metric, const ScoreParams& params) {
  if (context.rollouts.empty()) throw ShapeError("score_level requires at least one rollout");
  switch (metric) {
    case Metric::MNA: return mna(context, params.gamma, params.lambda);
    case Metric::PVL: {
      double s = 0.0;
      for (const auto& t : context.rollouts) s += pvl(t, params.gamma, params.lambda);
      return s / static_cast<double>(context.rollouts.size());
    }
    case Metric::MaxMC: {
      double s = 0.0;
      for (const auto& t : context.rollouts) s += maxmc(t, context.r_max);
      return s / static_cast<double>(context.rollouts.size());
    }
    case Metric::Learnability: {
      int solved = 0;
      for (const auto& t : context.rollouts) solved += t.solved ? 1 : 0;
      return learnability(static_cast<double>(solved) /
                          static_cast<double>(context.rollouts.size()));
    }
  }
  return 0.0;
}

std::string score_report_json(const std::string& level_id, Metric metric, double value,
                              int total_steps, int rollouts, bool ever_solved) {
  nlohmann::json j;
  j["level_id"] = level_id;
  j["metric"] = std::string(to_string(metric));
  j["value"] = value;
  j["T"] = total_steps;
  j["rollouts"] = rollouts;
  j["ever_solved"] = ever_solved;
  return j.dump();
}

}  // namespace degen
