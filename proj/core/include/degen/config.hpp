#pragma once

#include <cstdint>
#include <string>

#include "degen/levelgen.hpp"
#include "degen/ppo.hpp"
#include "degen/replay.hpp"
#include "degen/scoring.hpp"

namespace degen {

enum class Method { DR, PLR, ACCEL, InitialGen, DEGen, SFL };
Method method_from_string(std::string_view name);
std::string_view to_string(Method m);

/// PPO hyperparameters plus network size for one agent.
struct AgentConfig {
  double gamma = 0.995;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatches = 4;
  double clip_range = 0.04;
  double learning_rate = 5e-4;
  bool anneal_lr = true;
  double adam_eps = 1e-5;
  double max_grad_norm = 0.5;
  bool value_clipping = true;
  double value_coef = 0.5;
  double entropy_coef = 1e-3;
  int embed_dim = 64;
  int hidden_dim = 256;
};

struct TeacherConfig : AgentConfig {
  double kl_coef = 5e-2;  ///< weight of KL(pi_a2 || q)
  double p_g = 0.01;
  int initial_gen_steps = 60;

  TeacherConfig();
};

struct EvalConfig {
  std::string manifest;  ///< resolved path; empty disables evaluation
  int interval = 250;
  int episodes = 10;
  bool greedy = false;
};

struct LoggingConfig {
  bool wall_clock = false;  ///< real timings in the CSV; otherwise 0 for byte-identical reruns
  bool episode_log = true;
  int checkpoint_interval = 0;  ///< 0 writes only the final checkpoint
};

struct RunConfig {
  Method method = Method::DR;
  Metric metric = Metric::MNA;
  std::uint64_t seed = 0;
  int num_updates = 30000;
  int num_envs = 256;
  int num_steps = 512;
  int threads = 1;
  GenConfig levelgen;  ///< also carries family, size and t_max
  AgentConfig student;
  TeacherConfig teacher;
  PLRConfig plr;
  int accel_edits = 20;
  bool train_on_new_levels = false;
  SFLConfig sfl;
  int score_rollouts = 0;  ///< episodes per level used in a score; 0 = all in the rollout
  EvalConfig eval;
  LoggingConfig logging;
};

/// Parses a config document. Missing keys keep their defaults; unknown keys,
/// wrong types and out-of-range values throw ConfigError. Relative
/// `eval.manifest` paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);
void validate_run_config(const RunConfig& cfg);

/// Fully resolved config as canonical JSON text.
std::string run_config_json(const RunConfig& cfg);
/// FNV-1a of run_config_json.
std::uint64_t config_hash(const RunConfig& cfg);

PPOConfig student_ppo(const AgentConfig& a);
/// a1 head: entropy; a2 head: KL to kl_prior(p_g).
PPOConfig teacher_ppo(const TeacherConfig& t);

}  // namespace degen
