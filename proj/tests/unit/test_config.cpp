#include <gtest/gtest.h>

#include <filesystem>

#include "degen/config.hpp"
#include "degen/errors.hpp"

using namespace degen;

TEST(Config, DefaultsFollowHyperparameterTables) {
  const RunConfig cfg = parse_run_config("{}");
  EXPECT_EQ(cfg.method, Method::DR);
  EXPECT_EQ(cfg.metric, Metric::MNA);
  EXPECT_EQ(cfg.student.clip_range, 0.04);
  EXPECT_EQ(cfg.student.entropy_coef, 1e-3);
  EXPECT_EQ(cfg.student.gamma, 0.995);
  EXPECT_EQ(cfg.teacher.clip_range, 0.2);
  EXPECT_EQ(cfg.teacher.entropy_coef, 5e-2);
  EXPECT_EQ(cfg.teacher.gamma, 0.998);
  EXPECT_EQ(cfg.teacher.p_g, 0.01);
  EXPECT_EQ(cfg.plr.temperature, 1.0);
  EXPECT_EQ(cfg.plr.staleness_coef, 0.3);
  EXPECT_EQ(cfg.plr.replay_rate, 0.5);
}

TEST(Config, ParsesSections) {
  const RunConfig cfg = parse_run_config(R"({
    "method": "DEGen", "metric": "PVL", "seed": 12, "num_updates": 7,
    "env": {"family": "key_minigrid", "size": 9},
    "levelgen": {"max_walls": 10},
    "student": {"hidden_dim": 16, "learning_rate": 0.001},
    "teacher": {"kl_coef": 0.1},
    "plr": {"capacity": 50},
    "eval": {"manifest": "levels/x.json", "interval": 5}
  })", "/base");
  EXPECT_EQ(cfg.method, Method::DEGen);
  EXPECT_EQ(cfg.metric, Metric::PVL);
  EXPECT_EQ(cfg.seed, 12u);
  EXPECT_EQ(cfg.levelgen.family, Family::KeyMinigrid);
  EXPECT_EQ(cfg.levelgen.size, 9);
  EXPECT_EQ(cfg.levelgen.max_walls, 10);
  EXPECT_EQ(cfg.student.hidden_dim, 16);
  EXPECT_EQ(cfg.teacher.kl_coef, 0.1);
  EXPECT_EQ(cfg.plr.capacity, 50);
  EXPECT_EQ(std::filesystem::path(cfg.eval.manifest), std::filesystem::path("/base/levels/x.json"));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_run_config(R"({"methd": "DR"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"student": {"hiden_dim": 3}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"method": "PAIRED"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"metric": "Learnability"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"num_envs": "many"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"num_envs": 0})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"plr": {"replay_rate": 2}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"method": "PLR", "plr": {"replay_rate": 0}})"), ConfigError);
  EXPECT_THROW(parse_run_config("{not json"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), Error);
}

TEST(Config, CanonicalJsonRoundTrips) {
  const RunConfig cfg = parse_run_config(R"({"method": "ACCEL", "seed": 3, "accel": {"num_edits": 7}})");
  const std::string text = run_config_json(cfg);
  const RunConfig again = parse_run_config(text);
  EXPECT_EQ(run_config_json(again), text);
  EXPECT_EQ(config_hash(again), config_hash(cfg));
  const RunConfig other = parse_run_config(R"({"method": "ACCEL", "seed": 4})");
  EXPECT_NE(config_hash(other), config_hash(cfg));
}

TEST(Config, PpoViews) {
  const RunConfig cfg = parse_run_config("{}");
  const PPOConfig s = student_ppo(cfg.student);
  EXPECT_EQ(s.loss.clip_range, 0.04);
  EXPECT_EQ(s.loss.entropy_coef, std::vector<double>{1e-3});
  EXPECT_TRUE(s.loss.kl_prior.empty());
  const PPOConfig t = teacher_ppo(cfg.teacher);
  ASSERT_EQ(t.loss.entropy_coef.size(), 2u);
  EXPECT_EQ(t.loss.entropy_coef[0], 5e-2);
  EXPECT_EQ(t.loss.entropy_coef[1], 0.0);
  ASSERT_EQ(t.loss.kl_prior.size(), 2u);
  EXPECT_TRUE(t.loss.kl_prior[0].empty());
  EXPECT_EQ(t.loss.kl_prior[1], (std::vector<double>{0.485, 0.485, 0.01, 0.01, 0.01}));
  EXPECT_EQ(t.loss.kl_coef[1], 5e-2);
}

TEST(Config, ShippedConfigsLoad) {
  namespace fs = std::filesystem;
  int n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(DEGEN_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".json") continue;
    SCOPED_TRACE(e.path().string());
    const RunConfig cfg = load_run_config(e.path().string());
    if (!cfg.eval.manifest.empty()) {
      EXPECT_TRUE(fs::exists(cfg.eval.manifest));
    }
    ++n;
  }
  EXPECT_GE(n, 3);
}
