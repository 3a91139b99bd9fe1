#include <gtest/gtest.h>

#include <json.hpp>

#include "degen/errors.hpp"
#include "degen/scoring.hpp"
#include "oracles.hpp"

using namespace degen;

namespace {

Trajectory traj(std::vector<double> r, std::vector<double> v, bool solved = false) {
  return {std::move(r), std::move(v), solved};
}

/// Rewards chosen so that delta = r + v_{t+1} - v_t reproduces `deltas` with v = 0.
Trajectory from_deltas(const std::vector<double>& deltas) {
  return traj(deltas, std::vector<double>(deltas.size() + 1, 0.0));
}

}  // namespace

TEST(Scoring, TrajectoryShapeIsChecked) {
  EXPECT_THROW(validate_trajectory(traj({}, {0.0})), ShapeError);
  EXPECT_THROW(validate_trajectory(traj({1.0}, {0.0})), ShapeError);
  EXPECT_NO_THROW(validate_trajectory(traj({1.0}, {0.0, 0.0})));
}

TEST(Scoring, TdErrors) {
  EXPECT_EQ(td_errors(traj({1.0}, {0.0, 0.0}), 0.9), std::vector<double>{1.0});
  const auto d = td_errors(traj({0.0, 1.0}, {0.5, 0.25, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(d[0], 0.0 + 0.5 * 0.25 - 0.5);
  EXPECT_DOUBLE_EQ(d[1], 1.0 - 0.25);
}

TEST(Scoring, PvlWorkedExamples) {
  EXPECT_DOUBLE_EQ(pvl(from_deltas({1.0, -2.0, 1.0}), 1.0, 1.0), 1.0 / 3.0);
  EXPECT_EQ(pvl(from_deltas({-1.0, -0.5, 0.0}), 0.99, 0.9), 0.0);
}

TEST(Scoring, MaxMcWorkedExamples) {
  EXPECT_DOUBLE_EQ(maxmc(traj({0.0, 1.0}, {0.5, 0.5, 9.0}), 1.0), 0.5);
  EXPECT_EQ(maxmc(traj({0.0, 0.3}, {0.3, 0.3, 0.0}), 0.3), 0.0);
  const auto ctx = LevelScoreContext::from_rollouts(
      {traj({0.0, 0.7}, {0.0, 0.0, 0.0}, true), traj({0.2}, {0.0, 0.0})});
  EXPECT_DOUBLE_EQ(ctx.r_max, 0.7);
  EXPECT_TRUE(ctx.ever_solved);
}

TEST(Scoring, VMaxAndNStepRegret) {
  const Trajectory t = traj({0.0, 0.0, 1.0}, {0.2, 0.9, 0.1, 0.0});
  EXPECT_EQ(v_max(t, 1, 0, 0.9), 0.9);
  EXPECT_EQ(n_step_regret(t, 1, 0, 0.9), 0.0);
  EXPECT_DOUBLE_EQ(v_max(t, 0, 1, 0.9), 0.81);
  EXPECT_DOUBLE_EQ(n_step_regret(t, 0, 3, 0.9), 0.81 - 0.81);
  EXPECT_DOUBLE_EQ(n_step_regret(t, 0, 2, 0.9), 0.81 - 0.81 * 0.1);
  EXPECT_THROW(v_max(t, 2, 2, 0.9), IndexError);
  EXPECT_THROW(n_step_regret(t, -1, 1, 0.9), IndexError);
}

TEST(Scoring, LambdaRegretLimits) {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const Trajectory t = oracle::random_trajectory(rng);
    for (int s = 0; s < t.length(); ++s) {
      EXPECT_NEAR(lambda_regret(t, s, 0.97, 1.0), n_step_regret(t, s, t.length() - s, 0.97), 1e-12);
      EXPECT_NEAR(lambda_regret(t, s, 0.97, 0.0), n_step_regret(t, s, 1, 0.97), 1e-12);
    }
  }
  const Trajectory zero = traj({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}, true);
  EXPECT_EQ(lambda_regret(zero, 0, 0.99, 0.95), 0.0);
  EXPECT_EQ(mna(LevelScoreContext::from_rollouts({zero}), 0.99, 0.95), 0.0);
}

TEST(Scoring, MatchesDirectOracles) {
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const Trajectory t = oracle::random_trajectory(rng);
    const double g = 0.9 + 0.1 * rng.uniform();
    const double l = 0.05 + 0.94 * rng.uniform();
    worst = std::max(worst, std::abs(pvl(t, g, l) - oracle::pvl(t, g, l)));
    worst = std::max(worst, std::abs(maxmc(t, 0.8) - oracle::maxmc(t, 0.8)));
    const auto all = lambda_regrets(t, g, l);
    for (int s = 0; s < t.length(); ++s) {
      worst = std::max(worst, std::abs(all[static_cast<std::size_t>(s)] -
                                       oracle::lambda_regret(t, s, g, l)));
      for (int n = 0; s + n <= t.length(); ++n) {
        worst = std::max(worst, std::abs(v_max(t, s, n, g) - oracle::v_max(t, s, n, g)));
        worst = std::max(worst,
                         std::abs(n_step_regret(t, s, n, g) - oracle::n_step_regret(t, s, n, g)));
      }
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Scoring, RegretPropertiesHold) {
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    const Trajectory t = oracle::random_trajectory(rng);
    for (int s = 0; s < t.length(); ++s) {
      for (int n = 0; s + n < t.length(); ++n) {
        ASSERT_GE(n_step_regret(t, s, n, 0.99), 0.0);
        ASSERT_GE(v_max(t, s, n + 1, 0.99), v_max(t, s, n, 0.99));
      }
    }
    ASSERT_GE(pvl(t, 0.99, 0.95), 0.0);
    ASSERT_GE(mna(LevelScoreContext::from_rollouts({t}, true), 0.99, 0.95), 0.0);
  }
}

TEST(Scoring, MnaAveragesRolloutsAndGates) {
  Rng rng(5);
  std::vector<Trajectory> rollouts;
  for (int i = 0; i < 4; ++i) rollouts.push_back(oracle::random_trajectory(rng));
  const auto solved = LevelScoreContext::from_rollouts(rollouts, true);
  EXPECT_NEAR(mna(solved, 0.99, 0.9), oracle::mna(rollouts, true, 0.99, 0.9), 1e-9);

  for (auto& r : rollouts) r.solved = false;
  const auto unsolved = LevelScoreContext::from_rollouts(rollouts, false);
  EXPECT_FALSE(unsolved.ever_solved);
  EXPECT_EQ(mna(unsolved, 0.99, 0.9), 0.0);
  EXPECT_THROW(mna(LevelScoreContext{}, 0.99, 0.9), ShapeError);
}

TEST(Scoring, PerStepScoresAverageToLevelScore) {
  Rng rng(6);
  const ScoreParams params{0.995, 0.95};
  for (int i = 0; i < 100; ++i) {
    const Trajectory t = oracle::random_trajectory(rng);
    const auto ctx = LevelScoreContext::from_rollouts({t}, true);
    for (Metric m : {Metric::MNA, Metric::PVL, Metric::MaxMC}) {
      const auto g = per_step_scores(t, m, params, ctx.ever_solved, ctx.r_max);
      double mean = 0.0;
      for (double x : g) mean += x;
      mean /= static_cast<double>(g.size());
      EXPECT_NEAR(mean, score_level(ctx, m, params), 1e-12);
    }
    const auto gated = per_step_scores(t, Metric::MNA, params, false, 0.0);
    for (double x : gated) EXPECT_EQ(x, 0.0);
  }
  EXPECT_THROW(per_step_scores(traj({0.0}, {0.0, 0.0}), Metric::Learnability, params, true, 0.0),
               UsageError);
}

TEST(Scoring, Learnability) {
  EXPECT_EQ(learnability(0.5), 0.25);
  EXPECT_EQ(learnability(0.0), 0.0);
  EXPECT_EQ(learnability(1.0), 0.0);
  EXPECT_DOUBLE_EQ(learnability(0.2), 0.16);
  EXPECT_THROW(learnability(-0.1), DomainError);
  EXPECT_THROW(learnability(1.5), DomainError);

  const auto ctx = LevelScoreContext::from_rollouts(
      {traj({1.0}, {0.0, 0.0}, true), traj({0.0}, {0.0, 0.0}, false)});
  EXPECT_EQ(score_level(ctx, Metric::Learnability, {}), 0.25);
}

TEST(Scoring, MetricNames) {
  EXPECT_EQ(metric_from_string("MNA"), Metric::MNA);
  EXPECT_EQ(metric_from_string("maxmc"), Metric::MaxMC);
  EXPECT_EQ(metric_from_string("learnability"), Metric::Learnability);
  EXPECT_THROW(metric_from_string("regret"), UsageError);
}

TEST(Scoring, ReportJson) {
  const auto j = nlohmann::json::parse(score_report_json("abc", Metric::MNA, 0.5, 12, 3, true));
  EXPECT_EQ(j.at("level_id"), "abc");
  EXPECT_EQ(j.at("metric"), "MNA");
  EXPECT_EQ(j.at("value"), 0.5);
  EXPECT_EQ(j.at("T"), 12);
  EXPECT_EQ(j.at("rollouts"), 3);
  EXPECT_EQ(j.at("ever_solved"), true);
}
