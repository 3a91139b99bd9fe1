#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "degen/degen_teacher.hpp"
#include "degen/network.hpp"
#include "degen/ppo.hpp"
#include "degen/rng.hpp"

namespace fixture {

/// Small teacher-shaped problem: a cell head with an entropy bonus and an
/// object head pulled toward kl_prior, random masks, mid-sequence episode
/// starts and stale log-probs so that some ratios fall outside the clip range.
struct LossProblem {
  degen::PolicyParams params;
  std::vector<degen::Sequence> sequences;
  degen::LossConfig cfg;

  std::vector<const degen::Sequence*> batch() const {
    std::vector<const degen::Sequence*> out;
    for (const auto& s : sequences) out.push_back(&s);
    return out;
  }
};

inline LossProblem loss_problem(std::uint64_t seed, int n_sequences = 3, int length = 6) {
  LossProblem prob;
  const degen::NetworkShape shape{4, 3, 3, {4, 5}};
  prob.params = degen::PolicyParams::init(shape, seed);
  degen::Rng rng(seed + 1);
  for (double& v : prob.params.values) v += 0.2 * rng.normal();

  const auto prior = degen::kl_prior(0.01);
  prob.cfg.clip_range = 0.2;
  prob.cfg.value_clip_range = 0.2;
  prob.cfg.clip_value = true;
  prob.cfg.value_coef = 0.5;
  prob.cfg.entropy_coef = {5e-2, 0.0};
  prob.cfg.kl_coef = {0.0, 5e-2};
  prob.cfg.kl_prior = {{}, std::vector<double>(prior.begin(), prior.end())};
  prob.cfg.normalize_advantages = true;

  for (int s = 0; s < n_sequences; ++s) {
    degen::Sequence seq;
    degen::Memory mem = degen::Memory::zeros(shape.hidden_dim);
    for (int t = 0; t < length; ++t) {
      const bool start = t > 0 && rng.bernoulli(0.2);
      if (start) mem = degen::Memory::zeros(shape.hidden_dim);
      std::vector<double> x(4);
      for (double& v : x) v = rng.bernoulli(0.6) ? rng.normal() : 0.0;
      std::vector<std::uint8_t> mask(9);
      for (auto& m : mask) m = rng.bernoulli(0.7) ? 1 : 0;
      mask[rng.below(4)] = 1;
      mask[4 + rng.below(5)] = 1;
      const degen::ActResult a = degen::act(prob.params, x, mem, mask, rng);
      seq.push(x, a.actions, mask, start, a.log_prob + 0.3 * rng.normal(),
               a.value + 0.3 * rng.normal());
      seq.rewards.back() = rng.bernoulli(0.3) ? rng.uniform() : 0.0;
      seq.dones.back() = rng.bernoulli(0.15) ? 1 : 0;
    }
    seq.bootstrap_value = rng.normal();
    seq.advantages.resize(static_cast<std::size_t>(length));
    seq.returns.resize(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) {
      seq.advantages[static_cast<std::size_t>(t)] = rng.normal();
      seq.returns[static_cast<std::size_t>(t)] = seq.values[static_cast<std::size_t>(t)] + 0.5 * rng.normal();
    }
    prob.sequences.push_back(std::move(seq));
  }
  return prob;
}

struct GradCheck {
  double worst_relative = 0.0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/// Central finite differences of the total loss against the analytic gradient.
/// Relative error uses max(|analytic|, |numeric|, floor) as the denominator.
inline GradCheck grad_check(const LossProblem& prob, double h = 1e-6, double floor = 1e-6) {
  const auto batch = prob.batch();
  std::vector<double> grad;
  degen::ppo_loss(prob.params, batch, prob.cfg, &grad);
  GradCheck out;
  out.coordinates = grad.size();
  degen::PolicyParams p = prob.params;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double saved = p.values[i];
    p.values[i] = saved + h;
    const double up = degen::ppo_loss(p, batch, prob.cfg).total;
    p.values[i] = saved - h;
    const double down = degen::ppo_loss(p, batch, prob.cfg).total;
    p.values[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), floor});
    const double rel = std::abs(grad[i] - numeric) / denom;
    if (rel > out.worst_relative) {
      out.worst_relative = rel;
      out.worst_index = i;
    }
  }
  return out;
}

}  // namespace fixture
