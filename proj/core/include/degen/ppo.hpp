#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "degen/network.hpp"

namespace degen {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation. `values` has one more entry than `rewards`
/// (the bootstrap); a done at t stops both bootstrapping and accumulation.
GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double gamma, double lambda);

/// Fills seq.advantages / seq.returns from its rewards, values and bootstrap.
void compute_gae(Sequence& seq, double gamma, double lambda);

struct LossConfig {
  double clip_range = 0.2;
  double value_clip_range = 0.2;
  bool clip_value = true;
  double value_coef = 0.5;
  std::vector<double> entropy_coef;             ///< per head; missing entries are 0
  std::vector<double> kl_coef;                  ///< per head; missing entries are 0
  std::vector<std::vector<double>> kl_prior;    ///< per head; empty disables KL
  bool normalize_advantages = true;
};

struct LossReport {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;  ///< mean entropy summed over heads with an entropy term
  double kl = 0.0;       ///< mean KL-to-prior summed over heads with a KL term
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int steps = 0;
};

/// Mean PPO loss over every step of `batch`:
///   -min(r A, clip(r) A) + c_v 0.5 max((v - R)^2, (v_clip - R)^2)
///   - sum_k c_H,k H_k + sum_k c_KL,k KL(pi_k || q_k).
/// When `grad` is non-null it receives d(total)/d(params) by backpropagation
/// through time. Sequences are processed on up to `threads` threads and
/// reduced in order.
LossReport ppo_loss(const PolicyParams& params, std::span<const Sequence* const> batch,
                    const LossConfig& cfg, std::vector<double>* grad = nullptr, int threads = 1);

class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, std::span<const double> grad, double lr,
            double eps = 1e-5, double beta1 = 0.9, double beta2 = 0.999);

  std::int64_t t() const { return t_; }
  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& v() const { return v_; }
  void restore(std::int64_t t, std::vector<double> m, std::vector<double> v);
  bool operator==(const Adam&) const = default;

 private:
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct PPOConfig {
  double gamma = 0.995;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatches = 4;
  double learning_rate = 5e-4;
  bool anneal_lr = true;
  double adam_eps = 1e-5;
  double max_grad_norm = 0.5;
  LossConfig loss;
};

/// Linear-to-zero schedule when annealing, constant otherwise.
double learning_rate_at(const PPOConfig& cfg, int update, int total_updates);

struct UpdateReport {
  LossReport loss;  ///< averaged over minibatches of the last epoch
  double grad_norm = 0.0;  ///< mean pre-clip norm over all minibatches
  int minibatch_steps = 0;
};

/// epochs x minibatches of clipped Adam steps. Minibatches partition the
/// sequences after a shuffle seeded by `shuffle_seed`. Sequences must already
/// carry advantages and returns. On a non-finite loss or gradient the params
/// and optimizer are restored and NonFiniteLoss is thrown.
UpdateReport ppo_update(PolicyParams& params, Adam& opt, std::span<const Sequence> batch,
                        const PPOConfig& cfg, double lr, std::uint64_t shuffle_seed,
                        int threads = 1);

/// Runs fn(i) for i in [0, n) on up to `threads` threads; rethrows the first
/// exception by index.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace degen
