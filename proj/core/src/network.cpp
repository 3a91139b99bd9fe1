#include "degen/network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "degen/errors.hpp"
#include "network_internal.hpp"

namespace degen {

namespace detail {

Layout::Layout(const NetworkShape& shape)
    : in(shape.input_dim), embed(shape.embed_dim), hidden(shape.hidden_dim) {
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t start = at;
    at += n;
    return start;
  };
  const auto E = static_cast<std::size_t>(embed);
  const auto H = static_cast<std::size_t>(hidden);
  w_embed = take(E * static_cast<std::size_t>(in));
  b_embed = take(E);
  w_x = take(4 * H * E);
  w_h = take(4 * H * H);
  b_gate = take(4 * H);
  for (int a : shape.heads) {
    w_head.push_back(take(static_cast<std::size_t>(a) * H));
    b_head.push_back(take(static_cast<std::size_t>(a)));
    head_size.push_back(a);
    head_offset.push_back(logits);
    logits += a;
  }
  w_value = take(H);
  b_value = take(1);
  total = at;
}

void validate_shape(const NetworkShape& shape) {
  if (shape.input_dim <= 0 || shape.embed_dim <= 0 || shape.hidden_dim <= 0 ||
      shape.heads.empty()) {
    throw ShapeError("network dimensions must be positive with at least one head");
  }
  for (int a : shape.heads) {
    if (a <= 0) throw ShapeError("every head needs at least one logit");
  }
}

}  // namespace detail

using detail::Layout;
using detail::sigmoid;
using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;

int NetworkShape::total_logits() const { return std::accumulate(heads.begin(), heads.end(), 0); }

std::size_t param_count(const NetworkShape& shape) {
  detail::validate_shape(shape);
  return Layout(shape).total;
}

PolicyParams PolicyParams::init(const NetworkShape& shape, std::uint64_t seed) {
  detail::validate_shape(shape);
  const Layout L(shape);
  PolicyParams p{shape, std::vector<double>(L.total, 0.0)};
  Rng rng(seed);
  auto fill = [&](std::size_t offset, std::size_t n, double scale) {
    for (std::size_t i = 0; i < n; ++i) p.values[offset + i] = scale * rng.normal();
  };
  const auto E = static_cast<std::size_t>(L.embed);
  const auto H = static_cast<std::size_t>(L.hidden);
  fill(L.w_embed, E * static_cast<std::size_t>(L.in), std::sqrt(2.0 / L.in));
  fill(L.w_x, 4 * H * E, 1.0 / std::sqrt(static_cast<double>(E)));
  fill(L.w_h, 4 * H * H, 1.0 / std::sqrt(static_cast<double>(H)));
  // forget gate bias
  for (std::size_t i = 0; i < H; ++i) p.values[L.b_gate + H + i] = 1.0;
  for (std::size_t k = 0; k < L.w_head.size(); ++k) {
    fill(L.w_head[k], static_cast<std::size_t>(L.head_size[k]) * H,
         0.01 / std::sqrt(static_cast<double>(H)));
  }
  fill(L.w_value, H, 1.0 / std::sqrt(static_cast<double>(H)));
  return p;
}

Memory Memory::zeros(int hidden_dim) {
  return {std::vector<double>(static_cast<std::size_t>(hidden_dim), 0.0),
          std::vector<double>(static_cast<std::size_t>(hidden_dim), 0.0)};
}

ForwardOutput forward_step(const PolicyParams& params, std::span<const double> features,
                           Memory& memory) {
  const Layout L(params.shape);
  if (params.values.size() != L.total) throw ShapeError("parameter vector size mismatch");
  if (static_cast<int>(features.size()) != L.in) throw ShapeError("feature size mismatch");
  if (static_cast<int>(memory.h.size()) != L.hidden || memory.c.size() != memory.h.size()) {
    throw ShapeError("memory size mismatch");
  }
  const double* w = params.values.data();
  const int E = L.embed, H = L.hidden;

  Eigen::VectorXd e = VecMap(w + L.b_embed, E);
  const MatMap w_embed(w + L.w_embed, E, L.in);
  for (int i = 0; i < L.in; ++i) {
    if (features[static_cast<std::size_t>(i)] != 0.0) {
      e += features[static_cast<std::size_t>(i)] * w_embed.col(i);
    }
  }
  e = e.array().tanh();

  Eigen::Map<Eigen::VectorXd> h(memory.h.data(), H);
  Eigen::Map<Eigen::VectorXd> c(memory.c.data(), H);
  Eigen::VectorXd z = VecMap(w + L.b_gate, 4 * H);
  z.noalias() += MatMap(w + L.w_x, 4 * H, E) * e;
  z.noalias() += MatMap(w + L.w_h, 4 * H, H) * h;
  for (int j = 0; j < H; ++j) {
    const double ig = sigmoid(z[j]);
    const double fg = sigmoid(z[H + j]);
    const double gg = std::tanh(z[2 * H + j]);
    const double og = sigmoid(z[3 * H + j]);
    c[j] = fg * c[j] + ig * gg;
    h[j] = og * std::tanh(c[j]);
  }

  ForwardOutput out;
  out.logits.resize(static_cast<std::size_t>(L.logits));
  for (std::size_t k = 0; k < L.w_head.size(); ++k) {
    Eigen::Map<Eigen::VectorXd> lk(out.logits.data() + L.head_offset[k], L.head_size[k]);
    lk = VecMap(w + L.b_head[k], L.head_size[k]);
    lk.noalias() += MatMap(w + L.w_head[k], L.head_size[k], H) * h;
  }
  out.value = w[L.b_value] + VecMap(w + L.w_value, H).dot(h);
  return out;
}

std::vector<double> masked_log_softmax(std::span<const double> logits,
                                       std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw ShapeError("mask size mismatch");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double peak = kNegInf;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) peak = std::max(peak, logits[i]);
  }
  if (peak == kNegInf) throw EmptyMask("no legal action under mask");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) sum += std::exp(logits[i] - peak);
  }
  const double log_z = peak + std::log(sum);
  std::vector<double> out(logits.size(), kNegInf);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) out[i] = logits[i] - log_z;
  }
  return out;
}

ActResult act(const PolicyParams& params, std::span<const double> features, Memory& memory,
              std::span<const std::uint8_t> mask, Rng& rng, bool greedy) {
  const auto total = static_cast<std::size_t>(params.shape.total_logits());
  if (mask.size() != total) throw ShapeError("mask size mismatch");
  // Check masks before touching memory so a failed call leaves it unchanged.
  std::size_t offset = 0;
  for (int a : params.shape.heads) {
    const auto head = mask.subspan(offset, static_cast<std::size_t>(a));
    if (std::none_of(head.begin(), head.end(), [](std::uint8_t m) { return m != 0; })) {
      throw EmptyMask("no legal action under mask");
    }
    offset += static_cast<std::size_t>(a);
  }

  const ForwardOutput fwd = forward_step(params, features, memory);
  ActResult result;
  result.value = fwd.value;
  offset = 0;
  std::vector<double> probs;
  for (int a : params.shape.heads) {
    const auto n = static_cast<std::size_t>(a);
    const auto logp = masked_log_softmax(std::span(fwd.logits).subspan(offset, n),
                                         mask.subspan(offset, n));
    std::size_t choice = 0;
    if (greedy) {
      choice = static_cast<std::size_t>(std::max_element(logp.begin(), logp.end()) - logp.begin());
    } else {
      probs.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) probs[i] = std::exp(logp[i]);
      choice = rng.categorical(probs);
    }
    result.actions.push_back(static_cast<int>(choice));
    result.log_prob += logp[choice];
    offset += n;
  }
  return result;
}

void Sequence::push(std::span<const double> step_features, std::span<const int> step_actions,
                    std::span<const std::uint8_t> step_mask, bool start, double log_prob,
                    double value) {
  features.insert(features.end(), step_features.begin(), step_features.end());
  actions.insert(actions.end(), step_actions.begin(), step_actions.end());
  masks.insert(masks.end(), step_mask.begin(), step_mask.end());
  starts.push_back(start || length == 0 ? 1 : 0);
  dones.push_back(0);
  log_probs.push_back(log_prob);
  values.push_back(value);
  rewards.push_back(0.0);
  ++length;
}

}  // namespace degen
