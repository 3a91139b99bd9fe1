// degen: train, evaluate and score UED runs from the command line.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "degen/checkpoint.hpp"
#include "degen/config.hpp"
#include "degen/errors.hpp"
#include "degen/levelgen.hpp"
#include "degen/orchestrator.hpp"
#include "degen/scoring.hpp"
#include "degen/solvability.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, int code = 1) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

std::uint64_t parse_seed(const std::string& text, const char* source) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw degen::UsageError(std::string(source) + " is not a non-negative integer: '" + text + "'");
}

int cmd_train(const std::string& config_path, const std::optional<std::string>& seed_flag,
              const std::string& out_dir, std::optional<int> threads) {
  degen::RunConfig cfg = degen::load_run_config(config_path);
  if (seed_flag) {
    cfg.seed = parse_seed(*seed_flag, "--seed");
  } else if (const char* env = std::getenv("DEGEN_SEED"); env != nullptr && *env != '\0') {
    cfg.seed = parse_seed(env, "DEGEN_SEED");
  }
  if (threads) cfg.threads = *threads;
  degen::validate_run_config(cfg);

  const auto result = degen::train(cfg, out_dir, [](const degen::TrainProgress& p) {
    if (!p.eval) return;
    std::cerr << "update " << p.update << "  train_return " << p.mean_train_return
              << "  train_solve " << p.train_solve_rate << "  eval_solve "
              << p.eval->mean_solve_rate << "  eval_return " << p.eval->mean_return << std::endl;
  });
  std::cout << nlohmann::json{{"out_dir", out_dir},
                              {"updates", result.updates},
                              {"iterations", result.iterations},
                              {"seed", cfg.seed}}
                   .dump()
            << std::endl;
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& manifest, int episodes, bool greedy,
             std::uint64_t seed, int threads, const std::string& out_path) {
  const auto ck = degen::load_checkpoint(checkpoint);
  const auto levels = degen::load_eval_manifest(manifest);
  const auto result =
      degen::evaluate(ck.network("student"), levels, episodes, greedy, seed, threads);
  const std::string text = degen::eval_result_json(result);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw degen::IoError("cannot write '" + out_path + "'");
    out << text << '\n';
  }
  std::cout << text << std::endl;
  return 0;
}

int cmd_score(const std::string& level_path, const std::string& checkpoint,
              const std::string& metric_name, int rollouts, std::uint64_t seed) {
  const degen::Metric metric = degen::metric_from_string(metric_name);
  const degen::Level level = degen::load_level_file(level_path);
  const auto ck = degen::load_checkpoint(checkpoint);
  auto trajectories = degen::rollout_episodes(ck.network("student"), level, rollouts, seed);
  int total_steps = 0;
  for (const auto& t : trajectories) total_steps += t.length();
  const auto context = degen::LevelScoreContext::from_rollouts(std::move(trajectories));
  const double value = degen::score_level(context, metric, {});
  char id[17];
  std::snprintf(id, sizeof id, "%016llx",
                static_cast<unsigned long long>(degen::level_hash(level)));
  std::cout << degen::score_report_json(id, metric, value, total_steps, rollouts,
                                        context.ever_solved)
            << std::endl;
  return 0;
}

int cmd_solvable(const std::string& level_path) {
  const degen::Level level = degen::load_level_file(level_path);
  std::cout << nlohmann::json{{"level", level_path}, {"solvable", degen::bfs_solvable(level)}}.dump()
            << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised environment design runs: DEGen, PLR, ACCEL, SFL, DR, Initial Gen"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train a student with the configured method");
  std::string config_path, out_dir;
  std::optional<std::string> seed_flag;
  std::optional<int> threads_flag;
  train->add_option("--config", config_path, "Run config JSON")->required();
  train->add_option("--seed", seed_flag, "Master seed (falls back to DEGEN_SEED, then the config)");
  train->add_option("--out-dir", out_dir, "Output directory")->required();
  train->add_option("--threads", threads_flag, "Rollout/update threads")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Zero-shot evaluation of a checkpoint");
  std::string checkpoint, manifest, eval_out;
  int episodes = 10, eval_threads = 1;
  bool greedy = false;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--manifest", manifest, "Eval manifest JSON")->required();
  eval->add_option("--episodes", episodes, "Episodes per level")->check(CLI::PositiveNumber);
  eval->add_flag("--greedy", greedy, "Argmax actions instead of sampling");
  eval->add_option("--seed", eval_seed, "Evaluation seed");
  eval->add_option("--threads", eval_threads, "Threads")->check(CLI::PositiveNumber);
  eval->add_option("--out", eval_out, "Also write the results JSON here");

  auto* score = app.add_subcommand("score", "Score one level under a checkpoint's student");
  std::string level_path, metric = "MNA";
  int rollouts = 8;
  std::uint64_t score_seed = 0;
  score->add_option("--level", level_path, "Level file")->required();
  score->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  score->add_option("--metric", metric, "PVL, MaxMC, MNA or learnability");
  score->add_option("--rollouts", rollouts, "Episodes to roll out")->check(CLI::PositiveNumber);
  score->add_option("--seed", score_seed, "Rollout seed");

  auto* solvable = app.add_subcommand("solvable", "Exact goal reachability of a level");
  std::string solvable_path;
  solvable->add_option("--level", solvable_path, "Level file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), 2);
  }

  try {
    if (*train) return cmd_train(config_path, seed_flag, out_dir, threads_flag);
    if (*eval) return cmd_eval(checkpoint, manifest, episodes, greedy, eval_seed, eval_threads, eval_out);
    if (*score) return cmd_score(level_path, checkpoint, metric, rollouts, score_seed);
    if (*solvable) return cmd_solvable(solvable_path);
  } catch (const degen::UsageError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const degen::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
  return 0;
}
