#include "degen/ppo.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "degen/errors.hpp"
#include "degen/rng.hpp"
#include "network_internal.hpp"

namespace degen {

using detail::Layout;
using detail::sigmoid;
using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using MutMatMap = Eigen::Map<Eigen::MatrixXd>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double gamma, double lambda) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1 || dones.size() != T) {
    throw ShapeError("gae expects |values| = |rewards| + 1 = |dones| + 1");
  }
  GaeResult out{std::vector<double>(T), std::vector<double>(T)};
  double running = 0.0;
  for (std::size_t k = T; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * values[k + 1] * live - values[k];
    running = delta + gamma * lambda * live * running;
    out.advantages[k] = running;
    out.returns[k] = running + values[k];
  }
  return out;
}

void compute_gae(Sequence& seq, double gamma, double lambda) {
  std::vector<double> values = seq.values;
  values.push_back(seq.bootstrap_value);
  auto r = gae(seq.rewards, values, seq.dones, gamma, lambda);
  seq.advantages = std::move(r.advantages);
  seq.returns = std::move(r.returns);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::clamp(threads, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

struct Totals {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double approx_kl = 0.0;
  double clipped = 0.0;
  double regularizer = 0.0;  // sum_k (-c_H,k H_k + c_KL,k KL_k), already weighted
};

double coef_at(const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; }

void check_sequence(const Sequence& s, const Layout& L, std::size_t heads) {
  const auto T = static_cast<std::size_t>(s.length);
  if (s.length <= 0 || s.features.size() != T * static_cast<std::size_t>(L.in) ||
      s.actions.size() != T * heads || s.masks.size() != T * static_cast<std::size_t>(L.logits) ||
      s.starts.size() != T || s.log_probs.size() != T || s.values.size() != T ||
      s.advantages.size() != T || s.returns.size() != T) {
    throw ShapeError("sequence arrays inconsistent with its length or the network shape");
  }
}

// Loss contributions of one sequence (already divided by the batch step count)
// and, if grad is non-null, their gradient accumulated into grad.
Totals sequence_loss(const PolicyParams& params, const Layout& L, const Sequence& s,
                     const LossConfig& cfg, double adv_mean, double adv_scale, double inv_n,
                     double* grad) {
  const int T = s.length, E = L.embed, H = L.hidden, A = L.logits, in = L.in;
  const std::size_t heads = L.head_size.size();
  const double* w = params.values.data();
  const MatMap w_embed(w + L.w_embed, E, in);
  const MatMap w_x(w + L.w_x, 4 * H, E);
  const MatMap w_h(w + L.w_h, 4 * H, H);
  const VecMap w_value(w + L.w_value, H);

  std::vector<double> emb(static_cast<std::size_t>(T * E));
  std::vector<double> gates(static_cast<std::size_t>(T * 4 * H));
  std::vector<double> cell(static_cast<std::size_t>(T * H));
  std::vector<double> tcell(static_cast<std::size_t>(T * H));
  std::vector<double> hid(static_cast<std::size_t>(T * H));
  std::vector<double> dlogit(static_cast<std::size_t>(T * A), 0.0);
  std::vector<double> dval(static_cast<std::size_t>(T), 0.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(H);

  Totals tot;
  std::vector<double> logits(static_cast<std::size_t>(A));
  std::vector<double> logp(static_cast<std::size_t>(A));
  std::vector<double> prob(static_cast<std::size_t>(A));

  for (int t = 0; t < T; ++t) {
    const double* x = s.features.data() + static_cast<std::ptrdiff_t>(t) * in;
    MutVecMap e(emb.data() + t * E, E);
    e = VecMap(w + L.b_embed, E);
    for (int i = 0; i < in; ++i) {
      if (x[i] != 0.0) e += x[i] * w_embed.col(i);
    }
    e = e.array().tanh();

    const bool fresh = s.starts[static_cast<std::size_t>(t)] != 0;
    const VecMap hp(fresh ? zero.data() : hid.data() + (t - 1) * H, H);
    const VecMap cp(fresh ? zero.data() : cell.data() + (t - 1) * H, H);
    MutVecMap z(gates.data() + t * 4 * H, 4 * H);
    z = VecMap(w + L.b_gate, 4 * H);
    z.noalias() += w_x * e;
    z.noalias() += w_h * hp;
    MutVecMap c(cell.data() + t * H, H), tc(tcell.data() + t * H, H), h(hid.data() + t * H, H);
    for (int j = 0; j < H; ++j) {
      z[j] = sigmoid(z[j]);
      z[H + j] = sigmoid(z[H + j]);
      z[2 * H + j] = std::tanh(z[2 * H + j]);
      z[3 * H + j] = sigmoid(z[3 * H + j]);
      c[j] = z[H + j] * cp[j] + z[j] * z[2 * H + j];
      tc[j] = std::tanh(c[j]);
      h[j] = z[3 * H + j] * tc[j];
    }

    // Heads: masked log-softmax, entropy, KL.
    const std::uint8_t* mask = s.masks.data() + static_cast<std::ptrdiff_t>(t) * A;
    const int* act = s.actions.data() + static_cast<std::ptrdiff_t>(t) * heads;
    double logp_new = 0.0;
    double* dz_logit = dlogit.data() + t * A;
    for (std::size_t k = 0; k < heads; ++k) {
      const int off = L.head_offset[k], n = L.head_size[k];
      MutVecMap lk(logits.data() + off, n);
      lk = VecMap(w + L.b_head[k], n);
      lk.noalias() += MatMap(w + L.w_head[k], n, H) * h;
      double peak = -std::numeric_limits<double>::infinity();
      for (int j = off; j < off + n; ++j) {
        if (mask[j]) peak = std::max(peak, logits[static_cast<std::size_t>(j)]);
      }
      if (!std::isfinite(peak)) throw EmptyMask("stored step has an empty head mask");
      double sum = 0.0;
      for (int j = off; j < off + n; ++j) {
        if (mask[j]) sum += std::exp(logits[static_cast<std::size_t>(j)] - peak);
      }
      const double log_z = peak + std::log(sum);
      double entropy = 0.0;
      double kl = 0.0;
      const bool has_kl = k < cfg.kl_prior.size() && !cfg.kl_prior[k].empty();
      for (int j = off; j < off + n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (!mask[j]) {
          prob[ju] = 0.0;
          logp[ju] = 0.0;
          continue;
        }
        logp[ju] = logits[ju] - log_z;
        prob[ju] = std::exp(logp[ju]);
        entropy -= prob[ju] * logp[ju];
        if (has_kl) kl += prob[ju] * (logp[ju] - std::log(cfg.kl_prior[k][ju - off]));
      }
      const int a = act[k];
      if (a < 0 || a >= n || !mask[off + a]) throw PolicyError("stored action is masked");
      logp_new += logp[static_cast<std::size_t>(off + a)];

      const double c_ent = coef_at(cfg.entropy_coef, k);
      const double c_kl = has_kl ? coef_at(cfg.kl_coef, k) : 0.0;
      if (c_ent != 0.0) tot.entropy += entropy * inv_n;
      if (c_kl != 0.0) tot.kl += kl * inv_n;
      tot.regularizer += (c_kl * kl - c_ent * entropy) * inv_n;
      for (int j = off; j < off + n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (!mask[j]) continue;
        double g = c_ent * inv_n * prob[ju] * (logp[ju] + entropy);
        if (c_kl != 0.0) {
          g += c_kl * inv_n * prob[ju] *
               ((logp[ju] - std::log(cfg.kl_prior[k][ju - off])) - kl);
        }
        dz_logit[j] = g;
      }
    }

    // Clipped surrogate.
    const auto tu = static_cast<std::size_t>(t);
    const double adv = (s.advantages[tu] - adv_mean) * adv_scale;
    const double log_ratio = logp_new - s.log_probs[tu];
    const double ratio = std::exp(log_ratio);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range);
    const double surr1 = ratio * adv, surr2 = clipped * adv;
    double g_logp = 0.0;
    if (surr1 <= surr2) {
      tot.policy -= surr1 * inv_n;
      g_logp = -adv * ratio * inv_n;
    } else {
      tot.policy -= surr2 * inv_n;
    }
    tot.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    if (std::abs(ratio - 1.0) > cfg.clip_range) tot.clipped += inv_n;
    if (g_logp != 0.0) {
      for (std::size_t k = 0; k < heads; ++k) {
        const int off = L.head_offset[k], n = L.head_size[k];
        for (int j = off; j < off + n; ++j) {
          if (!mask[j]) continue;
          const double onehot = (j == off + act[k]) ? 1.0 : 0.0;
          dz_logit[j] += g_logp * (onehot - prob[static_cast<std::size_t>(j)]);
        }
      }
    }

    // Value term.
    const double v = w[L.b_value] + w_value.dot(h);
    const double ret = s.returns[tu], v_old = s.values[tu];
    const double l1 = (v - ret) * (v - ret);
    if (cfg.clip_value) {
      const double dv_raw = v - v_old;
      const double vc = v_old + std::clamp(dv_raw, -cfg.value_clip_range, cfg.value_clip_range);
      const double l2 = (vc - ret) * (vc - ret);
      if (l1 >= l2) {
        tot.value += cfg.value_coef * 0.5 * l1 * inv_n;
        dval[tu] = cfg.value_coef * (v - ret) * inv_n;
      } else {
        tot.value += cfg.value_coef * 0.5 * l2 * inv_n;
        const bool inside = std::abs(dv_raw) < cfg.value_clip_range;
        dval[tu] = inside ? cfg.value_coef * (vc - ret) * inv_n : 0.0;
      }
    } else {
      tot.value += cfg.value_coef * 0.5 * l1 * inv_n;
      dval[tu] = cfg.value_coef * (v - ret) * inv_n;
    }
  }

  if (grad == nullptr) return tot;

  MutMatMap g_embed(grad + L.w_embed, E, in);
  MutVecMap g_bembed(grad + L.b_embed, E);
  MutMatMap g_x(grad + L.w_x, 4 * H, E);
  MutMatMap g_h(grad + L.w_h, 4 * H, H);
  MutVecMap g_bgate(grad + L.b_gate, 4 * H);
  MutVecMap g_value(grad + L.w_value, H);

  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H), dc_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dh(H), dc(H), dz(4 * H), de(E);
  for (int t = T - 1; t >= 0; --t) {
    const auto tu = static_cast<std::size_t>(t);
    const VecMap h(hid.data() + t * H, H);
    const VecMap gt(gates.data() + t * 4 * H, 4 * H);
    const VecMap tc(tcell.data() + t * H, H);
    const VecMap e(emb.data() + t * E, E);
    const bool fresh = s.starts[tu] != 0;
    const VecMap hp(fresh ? zero.data() : hid.data() + (t - 1) * H, H);
    const VecMap cp(fresh ? zero.data() : cell.data() + (t - 1) * H, H);

    dh = dh_next;
    for (std::size_t k = 0; k < heads; ++k) {
      const int n = L.head_size[k];
      const VecMap dl(dlogit.data() + t * A + L.head_offset[k], n);
      dh.noalias() += MatMap(w + L.w_head[k], n, H).transpose() * dl;
      MutMatMap(grad + L.w_head[k], n, H).noalias() += dl * h.transpose();
      MutVecMap(grad + L.b_head[k], n) += dl;
    }
    dh += dval[tu] * w_value;
    g_value += dval[tu] * h;
    grad[L.b_value] += dval[tu];

    for (int j = 0; j < H; ++j) {
      const double ig = gt[j], fg = gt[H + j], gg = gt[2 * H + j], og = gt[3 * H + j];
      const double d_o = dh[j] * tc[j];
      dc[j] = dh[j] * og * (1.0 - tc[j] * tc[j]) + dc_next[j];
      dz[j] = dc[j] * gg * ig * (1.0 - ig);
      dz[H + j] = dc[j] * cp[j] * fg * (1.0 - fg);
      dz[2 * H + j] = dc[j] * ig * (1.0 - gg * gg);
      dz[3 * H + j] = d_o * og * (1.0 - og);
      dc_next[j] = dc[j] * fg;
    }
    g_x.noalias() += dz * e.transpose();
    if (!fresh) g_h.noalias() += dz * hp.transpose();
    g_bgate += dz;
    de.noalias() = w_x.transpose() * dz;
    dh_next.noalias() = w_h.transpose() * dz;
    de.array() *= 1.0 - e.array().square();
    g_bembed += de;
    const double* x = s.features.data() + static_cast<std::ptrdiff_t>(t) * in;
    for (int i = 0; i < in; ++i) {
      if (x[i] != 0.0) g_embed.col(i) += x[i] * de;
    }
    if (fresh) {
      dh_next.setZero();
      dc_next.setZero();
    }
  }
  return tot;
}

}  // namespace

LossReport ppo_loss(const PolicyParams& params, std::span<const Sequence* const> batch,
                    const LossConfig& cfg, std::vector<double>* grad, int threads) {
  detail::validate_shape(params.shape);
  const Layout L(params.shape);
  if (params.values.size() != L.total) throw ShapeError("parameter vector size mismatch");
  if (batch.empty()) throw ShapeError("empty batch");
  for (std::size_t k = 0; k < cfg.kl_prior.size(); ++k) {
    if (!cfg.kl_prior[k].empty() &&
        static_cast<int>(cfg.kl_prior[k].size()) != params.shape.heads[k]) {
      throw ShapeError("KL prior size differs from its head");
    }
  }

  std::size_t n_steps = 0;
  double adv_sum = 0.0;
  for (const Sequence* s : batch) {
    check_sequence(*s, L, params.shape.heads.size());
    n_steps += static_cast<std::size_t>(s->length);
    for (double a : s->advantages) adv_sum += a;
  }
  double adv_mean = 0.0, adv_scale = 1.0;
  if (cfg.normalize_advantages) {
    adv_mean = adv_sum / static_cast<double>(n_steps);
    double var = 0.0;
    for (const Sequence* s : batch) {
      for (double a : s->advantages) var += (a - adv_mean) * (a - adv_mean);
    }
    adv_scale = 1.0 / (std::sqrt(var / static_cast<double>(n_steps)) + 1e-8);
  }
  const double inv_n = 1.0 / static_cast<double>(n_steps);

  const int n = static_cast<int>(batch.size());
  std::vector<Totals> parts(batch.size());
  std::vector<std::vector<double>> grads(grad ? batch.size() : 0);
  parallel_for(n, threads, [&](int i) {
    const auto iu = static_cast<std::size_t>(i);
    double* g = nullptr;
    if (grad) {
      grads[iu].assign(L.total, 0.0);
      g = grads[iu].data();
    }
    parts[iu] = sequence_loss(params, L, *batch[iu], cfg, adv_mean, adv_scale, inv_n, g);
  });

  LossReport rep;
  rep.steps = static_cast<int>(n_steps);
  double regularizer = 0.0;
  for (const Totals& p : parts) {
    rep.policy += p.policy;
    rep.value += p.value;
    rep.approx_kl += p.approx_kl;
    rep.clip_fraction += p.clipped;
    rep.entropy += p.entropy;
    rep.kl += p.kl;
    regularizer += p.regularizer;
  }
  rep.total = rep.policy + rep.value + regularizer;
  if (grad) {
    grad->assign(L.total, 0.0);
    for (const auto& g : grads) {
      for (std::size_t j = 0; j < L.total; ++j) (*grad)[j] += g[j];
    }
  }
  return rep;
}

void Adam::step(std::vector<double>& params, std::span<const double> grad, double lr, double eps,
                double beta1, double beta2) {
  if (m_.size() != params.size() || grad.size() != params.size()) {
    throw ShapeError("optimizer state does not match the parameter vector");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
}

void Adam::restore(std::int64_t t, std::vector<double> m, std::vector<double> v) {
  if (m.size() != v.size()) throw ShapeError("optimizer moment sizes differ");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

double learning_rate_at(const PPOConfig& cfg, int update, int total_updates) {
  if (!cfg.anneal_lr || total_updates <= 0) return cfg.learning_rate;
  const double frac = 1.0 - static_cast<double>(update) / static_cast<double>(total_updates);
  return cfg.learning_rate * std::max(frac, 0.0);
}

UpdateReport ppo_update(PolicyParams& params, Adam& opt, std::span<const Sequence> batch,
                        const PPOConfig& cfg, double lr, std::uint64_t shuffle_seed, int threads) {
  if (batch.empty()) throw ShapeError("empty batch");
  if (cfg.epochs <= 0 || cfg.minibatches <= 0) throw ConfigError("epochs and minibatches must be positive");
  const PolicyParams saved_params = params;
  const Adam saved_opt = opt;
  auto abort = [&](const std::string& what) {
    params = saved_params;
    opt = saved_opt;
    throw NonFiniteLoss(what);
  };

  const std::size_t n = batch.size();
  const std::size_t mb = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatches), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(shuffle_seed);
  std::vector<double> grad;
  std::vector<const Sequence*> chunk;
  UpdateReport report;
  double norm_sum = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    LossReport epoch_loss;
    for (std::size_t m = 0; m < mb; ++m) {
      chunk.clear();
      for (std::size_t i = m * n / mb; i < (m + 1) * n / mb; ++i) chunk.push_back(&batch[order[i]]);
      const LossReport loss = ppo_loss(params, chunk, cfg.loss, &grad, threads);
      double sq = 0.0;
      for (double g : grad) sq += g * g;
      const double norm = std::sqrt(sq);
      if (!std::isfinite(loss.total) || !std::isfinite(norm)) {
        abort("non-finite loss or gradient in epoch " + std::to_string(epoch));
      }
      if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
        const double scale = cfg.max_grad_norm / norm;
        for (double& g : grad) g *= scale;
      }
      opt.step(params.values, grad, lr, cfg.adam_eps);
      norm_sum += norm;
      ++report.minibatch_steps;
      const double w = 1.0 / static_cast<double>(mb);
      epoch_loss.total += w * loss.total;
      epoch_loss.policy += w * loss.policy;
      epoch_loss.value += w * loss.value;
      epoch_loss.entropy += w * loss.entropy;
      epoch_loss.kl += w * loss.kl;
      epoch_loss.approx_kl += w * loss.approx_kl;
      epoch_loss.clip_fraction += w * loss.clip_fraction;
      epoch_loss.steps += loss.steps;
    }
    report.loss = epoch_loss;
  }
  for (double v : params.values) {
    if (!std::isfinite(v)) abort("parameters became non-finite");
  }
  report.grad_norm = norm_sum / report.minibatch_steps;
  return report;
}

}  // namespace degen
