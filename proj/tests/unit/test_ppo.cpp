#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "degen/errors.hpp"
#include "degen/ppo.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace degen;

TEST(Gae, MatchesDirectSums) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = rng.uniform_int(1, 20);
    std::vector<double> r(static_cast<std::size_t>(T)), v(static_cast<std::size_t>(T + 1));
    std::vector<std::uint8_t> d(static_cast<std::size_t>(T));
    for (auto& x : r) x = rng.bernoulli(0.3) ? rng.uniform() : 0.0;
    for (auto& x : v) x = rng.normal();
    for (auto& x : d) x = rng.bernoulli(0.2) ? 1 : 0;
    const double g = 0.9 + 0.1 * rng.uniform(), l = rng.uniform();
    const GaeResult res = gae(r, v, d, g, l);
    const auto expect = oracle::gae(r, v, d, g, l);
    for (int t = 0; t < T; ++t) {
      const auto i = static_cast<std::size_t>(t);
      ASSERT_NEAR(res.advantages[i], expect[i], 1e-12);
      ASSERT_NEAR(res.returns[i], expect[i] + v[i], 1e-12);
    }
  }
}

TEST(Gae, LimitCases) {
  const std::vector<double> r{0.0, 0.0, 1.0};
  const std::vector<double> v{0.3, 0.6, 0.8, 0.5};
  const std::vector<std::uint8_t> d{0, 0, 0};
  const GaeResult td = gae(r, v, d, 0.9, 0.0);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(td.advantages[t], r[t] + 0.9 * v[t + 1] - v[t], 1e-15);
  const GaeResult mc = gae(r, v, std::vector<std::uint8_t>{0, 0, 1}, 1.0, 1.0);
  EXPECT_NEAR(mc.advantages[0], 1.0 - 0.3, 1e-15);
  EXPECT_NEAR(mc.advantages[2], 1.0 - 0.8, 1e-15);
  EXPECT_THROW(gae(r, std::vector<double>{0.0, 0.0}, d, 0.9, 0.9), ShapeError);
}

TEST(Gae, SequenceUsesBootstrap) {
  Sequence seq;
  const std::vector<double> f{0.0};
  const std::vector<int> a{0};
  const std::vector<std::uint8_t> m{1};
  seq.push(f, a, m, true, 0.0, 0.5);
  seq.push(f, a, m, false, 0.0, 0.5);
  seq.rewards = {0.0, 0.0};
  seq.bootstrap_value = 2.0;
  compute_gae(seq, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(seq.returns[1], 0.5 * 2.0);
  EXPECT_DOUBLE_EQ(seq.returns[0], 0.25 * 2.0);
  seq.dones[1] = 1;
  compute_gae(seq, 0.5, 1.0);
  EXPECT_EQ(seq.returns[1], 0.0);
}

TEST(PpoLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto prob = fixture::loss_problem(seed);
    ASSERT_LE(prob.params.values.size(), 200u);
    const auto check = fixture::grad_check(prob);
    EXPECT_LT(check.worst_relative, 1e-4) << "seed " << seed << " coordinate " << check.worst_index;
  }
}

TEST(PpoLoss, GradientCoversPlainStudentLoss) {
  auto prob = fixture::loss_problem(11);
  prob.cfg.entropy_coef = {1e-3};
  prob.cfg.kl_coef.clear();
  prob.cfg.kl_prior.clear();
  prob.cfg.clip_value = false;
  prob.cfg.normalize_advantages = false;
  EXPECT_LT(fixture::grad_check(prob).worst_relative, 1e-4);
}

TEST(PpoLoss, ReportsComponents) {
  const auto prob = fixture::loss_problem(4);
  const LossReport rep = ppo_loss(prob.params, prob.batch(), prob.cfg);
  EXPECT_EQ(rep.steps, 18);
  EXPECT_GT(rep.entropy, 0.0);
  EXPECT_GE(rep.kl, 0.0);
  EXPECT_GE(rep.clip_fraction, 0.0);
  EXPECT_LE(rep.clip_fraction, 1.0);
  EXPECT_NEAR(rep.total,
              rep.policy + rep.value - prob.cfg.entropy_coef[0] * rep.entropy +
                  prob.cfg.kl_coef[1] * rep.kl,
              1e-12);
}

TEST(PpoLoss, MaskedLogitsGetNoGradient) {
  auto prob = fixture::loss_problem(5);
  // Mask cell-head entry 3 everywhere.
  for (auto& seq : prob.sequences) {
    for (int t = 0; t < seq.length; ++t) {
      const auto base = static_cast<std::size_t>(t) * 9;
      seq.masks[base + 3] = 0;
      if (seq.actions[static_cast<std::size_t>(t) * 2] == 3) {
        seq.actions[static_cast<std::size_t>(t) * 2] = 0;
        seq.masks[base + 0] = 1;
      }
    }
  }
  std::vector<double> grad;
  ppo_loss(prob.params, prob.batch(), prob.cfg, &grad);
  const std::size_t H = 3;
  const std::size_t head0_w = 4 * 3 + 3 + 12 * 3 + 12 * 3 + 12;
  const std::size_t head0_b = head0_w + 4 * H;
  EXPECT_EQ(grad[head0_b + 3], 0.0);
  for (std::size_t j = 0; j < H; ++j) EXPECT_EQ(grad[head0_w + j * 4 + 3], 0.0);

  // and the loss ignores whatever the masked logit holds
  const double before = ppo_loss(prob.params, prob.batch(), prob.cfg).total;
  prob.params.values[head0_b + 3] += 25.0;
  EXPECT_EQ(ppo_loss(prob.params, prob.batch(), prob.cfg).total, before);
}

TEST(PpoLoss, ThreadCountDoesNotChangeResults) {
  const auto prob = fixture::loss_problem(6, 7, 9);
  std::vector<double> g1, g3;
  const LossReport a = ppo_loss(prob.params, prob.batch(), prob.cfg, &g1, 1);
  const LossReport b = ppo_loss(prob.params, prob.batch(), prob.cfg, &g3, 3);
  EXPECT_EQ(a.total, b.total);
  EXPECT_EQ(g1, g3);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Adam opt(3);
  std::vector<double> p{1.0, 1.0, 1.0};
  const std::vector<double> g{0.5, -2.0, 0.0};
  opt.step(p, g, 0.1, 1e-8);
  EXPECT_NEAR(p[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p[1], 1.0 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-12);
  EXPECT_EQ(p[2], 1.0);
  EXPECT_EQ(opt.t(), 1);
  std::vector<double> wrong(2);
  EXPECT_THROW(opt.step(wrong, g, 0.1), ShapeError);
}

TEST(Schedule, LinearAnneal) {
  PPOConfig cfg;
  cfg.learning_rate = 1e-3;
  EXPECT_EQ(learning_rate_at(cfg, 0, 100), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate_at(cfg, 25, 100), 7.5e-4);
  EXPECT_EQ(learning_rate_at(cfg, 100, 100), 0.0);
  cfg.anneal_lr = false;
  EXPECT_EQ(learning_rate_at(cfg, 50, 100), 1e-3);
}

TEST(PpoUpdate, DeterministicAndThreadInvariant) {
  const auto prob = fixture::loss_problem(7, 8, 6);
  PPOConfig cfg;
  cfg.loss = prob.cfg;
  PolicyParams p1 = prob.params, p2 = prob.params;
  Adam o1(p1.values.size()), o2(p2.values.size());
  const UpdateReport r1 = ppo_update(p1, o1, prob.sequences, cfg, 1e-3, 42, 1);
  const UpdateReport r2 = ppo_update(p2, o2, prob.sequences, cfg, 1e-3, 42, 4);
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(o1, o2);
  EXPECT_EQ(r1.minibatch_steps, 16);
  EXPECT_EQ(r1.loss.total, r2.loss.total);
  EXPECT_NE(p1, prob.params);
}

TEST(PpoUpdate, ReducesLossOnAFixedBatch) {
  const auto prob = fixture::loss_problem(8, 8, 6);
  PPOConfig cfg;
  cfg.loss = prob.cfg;
  cfg.loss.normalize_advantages = false;
  cfg.minibatches = 1;
  cfg.epochs = 1;
  PolicyParams p = prob.params;
  Adam opt(p.values.size());
  const double before = ppo_loss(p, prob.batch(), cfg.loss).total;
  for (int i = 0; i < 30; ++i) ppo_update(p, opt, prob.sequences, cfg, 3e-3, 1);
  EXPECT_LT(ppo_loss(p, prob.batch(), cfg.loss).total, before);
}

TEST(PpoUpdate, NonFiniteLossRestoresState) {
  auto prob = fixture::loss_problem(9);
  PPOConfig cfg;
  cfg.loss = prob.cfg;
  PolicyParams p = prob.params;
  Adam opt(p.values.size());
  ppo_update(p, opt, prob.sequences, cfg, 1e-3, 1);
  const PolicyParams saved = p;
  const Adam saved_opt = opt;
  prob.sequences[1].advantages[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ppo_update(p, opt, prob.sequences, cfg, 1e-3, 2), NonFiniteLoss);
  EXPECT_EQ(p, saved);
  EXPECT_EQ(opt, saved_opt);
}

TEST(ParallelFor, CoversEveryIndexAndRethrows) {
  std::vector<int> hits(50, 0);
  parallel_for(50, 4, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](int i) {
                              if (i == 7) throw DomainError("seven");
                            }),
               DomainError);
}
