#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "degen/rng.hpp"

namespace degen {

/// encoder (affine + tanh) -> LSTM cell -> one categorical head per sub-action + value head.
struct NetworkShape {
  int input_dim = 0;
  int embed_dim = 0;
  int hidden_dim = 0;
  std::vector<int> heads;  ///< logits per categorical head

  int total_logits() const;
  bool operator==(const NetworkShape&) const = default;
};

std::size_t param_count(const NetworkShape& shape);

/// Flat parameter vector plus the shape that interprets it.
struct PolicyParams {
  NetworkShape shape;
  std::vector<double> values;

  static PolicyParams init(const NetworkShape& shape, std::uint64_t seed);
  bool operator==(const PolicyParams&) const = default;
};

struct Memory {
  std::vector<double> h;
  std::vector<double> c;
  static Memory zeros(int hidden_dim);
};

struct ForwardOutput {
  std::vector<double> logits;  ///< heads concatenated
  double value = 0.0;
};

/// One recurrent step; advances `memory`.
ForwardOutput forward_step(const PolicyParams& params, std::span<const double> features,
                           Memory& memory);

/// Log-softmax restricted to entries with mask != 0; masked entries get -inf.
std::vector<double> masked_log_softmax(std::span<const double> logits,
                                       std::span<const std::uint8_t> mask);

struct ActResult {
  std::vector<int> actions;  ///< one index per head
  double log_prob = 0.0;     ///< joint (sum over heads)
  double value = 0.0;
};

/// Samples (or argmaxes) every head under its mask. Throws EmptyMask if a head
/// has no legal entry.
ActResult act(const PolicyParams& params, std::span<const double> features, Memory& memory,
              std::span<const std::uint8_t> mask, Rng& rng, bool greedy = false);

/// One environment's trajectory, as stored for a PPO update. Memory is zero
/// at index 0 and at every index flagged in `starts`.
struct Sequence {
  int length = 0;
  std::vector<double> features;      ///< length x input_dim
  std::vector<int> actions;          ///< length x heads
  std::vector<std::uint8_t> masks;   ///< length x total_logits
  std::vector<std::uint8_t> starts;  ///< episode starts
  std::vector<std::uint8_t> dones;   ///< true termination after the step
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  double bootstrap_value = 0.0;  ///< V(s_length) if the last step is not terminal
  std::vector<double> advantages;
  std::vector<double> returns;

  /// Appends one step; `features`/`mask` sizes must match the network shape.
  void push(std::span<const double> step_features, std::span<const int> step_actions,
            std::span<const std::uint8_t> step_mask, bool start, double log_prob, double value);
};

}  // namespace degen
