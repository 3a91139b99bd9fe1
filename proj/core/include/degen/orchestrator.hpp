#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "degen/config.hpp"
#include "degen/levelgen.hpp"
#include "degen/network.hpp"
#include "degen/scoring.hpp"

namespace degen {

struct EvalLevelResult {
  std::string name;
  double solve_rate = 0.0;
  double mean_return = 0.0;
};

struct EvalResult {
  std::vector<EvalLevelResult> levels;
  double mean_solve_rate = 0.0;
  double mean_return = 0.0;
};

/// Rolls the student out `episodes` times per level to termination or T_max.
/// Never modifies `student`.
EvalResult evaluate(const PolicyParams& student, const std::vector<EvalEntry>& levels,
                    int episodes, bool greedy, std::uint64_t seed, int threads = 1);

/// {"levels": [{name, solve_rate, mean_return}...], "mean": {solve_rate, mean_return}}.
std::string eval_result_json(const EvalResult& result);

/// Complete episodes of one level (values end with 0 at termination).
std::vector<Trajectory> rollout_episodes(const PolicyParams& student, const Level& level,
                                         int episodes, std::uint64_t seed, bool greedy = false);

struct TrainProgress {
  int update = 0;
  double mean_train_return = 0.0;
  double train_solve_rate = 0.0;
  std::optional<EvalResult> eval;
};

struct TrainResult {
  PolicyParams student;
  std::optional<PolicyParams> teacher;
  int updates = 0;
  int iterations = 0;
};

/// Runs the configured method for exactly cfg.num_updates student updates and
/// writes metrics.csv, train_stats.csv, manifest.json, episodes.jsonl and
/// checkpoint.bin (plus buffer.jsonl for replay methods) into `out_dir`.
TrainResult train(const RunConfig& cfg, const std::string& out_dir,
                  const std::function<void(const TrainProgress&)>& progress = {});

/// Header of the metrics CSV.
inline constexpr const char* kMetricsHeader =
    "update,wall_clock_s,method,metric,seed,level_name,solve_rate,mean_return";

}  // namespace degen
