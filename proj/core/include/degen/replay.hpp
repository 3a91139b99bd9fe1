#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "degen/level.hpp"
#include "degen/rng.hpp"

namespace degen {

struct PLRConfig {
  double replay_rate = 0.5;
  int capacity = 8000;
  double temperature = 1.0;
  double staleness_coef = 0.3;
};

void validate_plr_config(const PLRConfig& cfg);

struct BufferEntry {
  Level level;
  std::uint64_t hash = 0;
  double score = 0.0;
  int last_scored_update = 0;
  int insert_update = 0;
  bool ever_solved = false;
};

enum class ReplayDecision { Replay, SampleNew };

enum class InsertOutcome { Inserted, Updated, Rejected };

/// Rank-prioritized replay buffer with staleness mixing.
class PLRBuffer {
 public:
  explicit PLRBuffer(PLRConfig cfg = {});

  const PLRConfig& config() const { return cfg_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<BufferEntry>& entries() const { return entries_; }
  const BufferEntry* find(std::uint64_t hash) const;

  /// Bernoulli(replay_rate), forced SampleNew while empty.
  ReplayDecision decide_replay(Rng& rng) const;

  /// P_i = (1 - rho) rank_i^(-1/beta) / Z + rho staleness_i / S, rank 1 = highest
  /// score with ties going to the older insert. Uniform staleness term when all
  /// staleness is zero. Throws EmptyBuffer.
  std::vector<double> sampling_distribution(int current_update) const;
  std::size_t sample_index(Rng& rng, int current_update) const;

  /// Identity is level_hash. Existing entries are rescored in place and keep
  /// their solve history; a new entry beyond capacity evicts a minimum-score
  /// entry (ties evict the newest), which may be the new level itself.
  InsertOutcome insert_or_update(const Level& level, double score, int current_update,
                                 bool solved = false);

  /// Mutation of a sampled entry; the caller scores it before insertion.
  struct Proposal {
    Level level;
    std::uint64_t parent_hash = 0;
  };
  Proposal accel_propose(Rng& rng, int current_update, int n_edits) const;

  /// One JSON object per entry: hash, score, staleness, ever_solved, level.
  std::string snapshot_jsonl(int current_update) const;

 private:
  void reindex();

  PLRConfig cfg_;
  std::vector<BufferEntry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

struct SFLConfig {
  int batch_size = 25000;       ///< random levels evaluated per refresh
  int rollout_length = 20000;   ///< per-level step cap while estimating success
  int update_period = 100;
  int buffer_size = 1000;
  double sample_ratio = 0.5;
  int episodes_per_level = 8;
};

void validate_sfl_config(const SFLConfig& cfg);

struct SFLCandidate {
  Level level;
  double success_rate = 0.0;
};

struct SFLEntry {
  Level level;
  double success_rate = 0.0;
  double learnability = 0.0;
};

/// Top-K levels by p(1 - p). Levels with zero learnability are kept only when
/// no candidate has positive learnability.
class SFLBuffer {
 public:
  explicit SFLBuffer(SFLConfig cfg = {});

  const SFLConfig& config() const { return cfg_; }
  const std::vector<SFLEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  bool due(int update) const { return update % cfg_.update_period == 0; }

  void refresh(const std::vector<SFLCandidate>& candidates);
  /// Bernoulli(sample_ratio) when nonempty, else false.
  bool use_buffer(Rng& rng) const;
  const Level& sample(Rng& rng) const;

 private:
  SFLConfig cfg_;
  std::vector<SFLEntry> entries_;
};

}  // namespace degen
