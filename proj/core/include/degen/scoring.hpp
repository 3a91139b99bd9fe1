#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace degen {

/// One episode as seen by a score function. `values` has T+1 entries: the
/// last is the bootstrap value (0 on true termination).
struct Trajectory {
  std::vector<double> rewards;
  std::vector<double> values;
  bool solved = false;

  int length() const { return static_cast<int>(rewards.size()); }
  double episode_return() const;
};

/// Throws ShapeError unless T >= 1 and values.size() == T + 1.
void validate_trajectory(const Trajectory& traj);

struct ScoreParams {
  double gamma = 0.995;
  double lambda = 0.95;
};

/// Every rollout of one level plus its approximate-solvability basis.
struct LevelScoreContext {
  std::vector<Trajectory> rollouts;
  bool ever_solved = false;  ///< rollouts or recorded history contain a success
  double r_max = 0.0;        ///< best episode return across rollouts

  /// Builds a context with r_max and ever_solved derived from the rollouts,
  /// OR-ed with `history_solved`.
  static LevelScoreContext from_rollouts(std::vector<Trajectory> rollouts,
                                         bool history_solved = false);
};

enum class Metric { PVL, MaxMC, MNA, Learnability };
Metric metric_from_string(std::string_view name);
std::string_view to_string(Metric m);

/// delta_t = r_t + gamma v_{t+1} - v_t for t < T.
std::vector<double> td_errors(const Trajectory& traj, double gamma);

/// Mean over t of the zero-clipped lambda-advantage.
double pvl(const Trajectory& traj, double gamma, double lambda);

/// Mean of R_max - v_t over the T visited states (bootstrap excluded).
double maxmc(const Trajectory& traj, double r_max);

/// Best of the m-step bootstrapped returns from t, m = 0..n. Requires t + n <= T.
double v_max(const Trajectory& traj, int t, int n, double gamma);

/// v_max(t, n) minus the n-step bootstrapped return from t. Always >= 0.
double n_step_regret(const Trajectory& traj, int t, int n, double gamma);

/// Lambda-mixture of n-step regrets, n = 1..T-t, weights (1-l) l^(n-1) with
/// the truncated tail mass l^(T-t-1) placed on n = T-t.
double lambda_regret(const Trajectory& traj, int t, double gamma, double lambda);

/// lambda_regret for every t in one O(T^2) sweep.
std::vector<double> lambda_regrets(const Trajectory& traj, double gamma, double lambda);

/// Per-rollout mean of lambda regrets, averaged over rollouts, times the
/// approximate-solvability indicator.
double mna(const LevelScoreContext& context, double gamma, double lambda);

/// p (1 - p). Throws DomainError outside [0, 1].
double learnability(double success_rate);

/// Per-student-step terms G_t whose mean is the level score. MNA uses
/// lambda regret times the solvability indicator; PVL the clipped advantage;
/// MaxMC the gap R_max - v_t.
std::vector<double> per_step_scores(const Trajectory& traj, Metric metric, const ScoreParams& params,
                                    bool ever_solved, double r_max);

/// Dispatches a level score. Learnability uses the empirical solve rate of the rollouts.
double score_level(const LevelScoreContext& context, Metric metric, const ScoreParams& params);

/// Score report JSON: {level_id, metric, value, T, rollouts, ever_solved}.
std::string score_report_json(const std::string& level_id, Metric metric, double value,
                              int total_steps, int rollouts, bool ever_solved);

}  // namespace degen
