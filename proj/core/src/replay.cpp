#include "degen/replay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "degen/errors.hpp"
#include "degen/levelgen.hpp"
#include "degen/scoring.hpp"

namespace degen {

void validate_plr_config(const PLRConfig& cfg) {
  if (!(cfg.replay_rate >= 0.0 && cfg.replay_rate <= 1.0)) {
    throw ConfigError("plr.replay_rate must be in [0, 1]");
  }
  if (cfg.capacity < 1) throw ConfigError("plr.capacity must be >= 1");
  if (!(cfg.temperature > 0.0)) throw ConfigError("plr.temperature must be > 0");
  if (!(cfg.staleness_coef >= 0.0 && cfg.staleness_coef <= 1.0)) {
    throw ConfigError("plr.staleness_coef must be in [0, 1]");
  }
}

PLRBuffer::PLRBuffer(PLRConfig cfg) : cfg_(cfg) { validate_plr_config(cfg_); }

const BufferEntry* PLRBuffer::find(std::uint64_t hash) const {
  const auto it = index_.find(hash);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

ReplayDecision PLRBuffer::decide_replay(Rng& rng) const {
  // Draw even when empty so the stream does not depend on buffer state.
  const bool replay = rng.bernoulli(cfg_.replay_rate);
  return replay && !empty() ? ReplayDecision::Replay : ReplayDecision::SampleNew;
}

std::vector<double> PLRBuffer::sampling_distribution(int current_update) const {
  if (empty()) throw EmptyBuffer("sampling from an empty buffer");
  const std::size_t n = entries_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = entries_[a];
    const auto& eb = entries_[b];
    if (ea.score != eb.score) return ea.score > eb.score;
    return ea.insert_update < eb.insert_update;
  });
  std::vector<double> score_p(n), stale_p(n);
  double z = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double w = std::pow(1.0 / static_cast<double>(r + 1), 1.0 / cfg_.temperature);
    score_p[order[r]] = w;
    z += w;
  }
  double stale_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stale_p[i] = static_cast<double>(std::max(0, current_update - entries_[i].last_scored_update));
    stale_total += stale_p[i];
  }
  std::vector<double> p(n);
  const double rho = cfg_.staleness_coef;
  for (std::size_t i = 0; i < n; ++i) {
    const double stale = stale_total > 0.0 ? stale_p[i] / stale_total : 1.0 / static_cast<double>(n);
    p[i] = (1.0 - rho) * score_p[i] / z + rho * stale;
  }
  return p;
}

std::size_t PLRBuffer::sample_index(Rng& rng, int current_update) const {
  const auto p = sampling_distribution(current_update);
  return rng.categorical(p);
}

InsertOutcome PLRBuffer::insert_or_update(const Level& level, double score, int current_update,
                                          bool solved) {
  if (!std::isfinite(score)) throw DomainError("buffer scores must be finite");
  const std::uint64_t h = level_hash(level);
  if (const auto it = index_.find(h); it != index_.end()) {
    auto& e = entries_[it->second];
    e.score = score;
    e.last_scored_update = current_update;
    e.ever_solved = e.ever_solved || solved;
    return InsertOutcome::Updated;
  }
  entries_.push_back({level, h, score, current_update, current_update, solved});
  index_.emplace(h, entries_.size() - 1);
  if (entries_.size() <= static_cast<std::size_t>(cfg_.capacity)) return InsertOutcome::Inserted;

  std::size_t victim = 0;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    const auto& v = entries_[victim];
    if (e.score < v.score || (e.score == v.score && e.insert_update >= v.insert_update)) victim = i;
  }
  const bool rejected = victim == entries_.size() - 1;
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
  reindex();
  return rejected ? InsertOutcome::Rejected : InsertOutcome::Inserted;
}

void PLRBuffer::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].hash, i);
}

PLRBuffer::Proposal PLRBuffer::accel_propose(Rng& rng, int current_update, int n_edits) const {
  if (empty()) throw EmptyBuffer("ACCEL proposal needs a nonempty buffer");
  const auto& parent = entries_[sample_index(rng, current_update)];
  return {mutate(parent.level, n_edits, rng.next()), parent.hash};
}

std::string PLRBuffer::snapshot_jsonl(int current_update) const {
  std::ostringstream out;
  char hex[17];
  for (const auto& e : entries_) {
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(e.hash));
    nlohmann::json j{{"hash", hex},
                     {"score", e.score},
                     {"staleness", current_update - e.last_scored_update},
                     {"ever_solved", e.ever_solved},
                     {"level", serialize_level(e.level)}};
    out << j.dump() << '\n';
  }
  return out.str();
}

void validate_sfl_config(const SFLConfig& cfg) {
  if (cfg.batch_size < 1 || cfg.rollout_length < 1 || cfg.update_period < 1 ||
      cfg.buffer_size < 1 || cfg.episodes_per_level < 1) {
    throw ConfigError("sfl sizes and periods must be positive");
  }
  if (!(cfg.sample_ratio >= 0.0 && cfg.sample_ratio <= 1.0)) {
    throw ConfigError("sfl.sample_ratio must be in [0, 1]");
  }
}

SFLBuffer::SFLBuffer(SFLConfig cfg) : cfg_(cfg) { validate_sfl_config(cfg_); }

void SFLBuffer::refresh(const std::vector<SFLCandidate>& candidates) {
  std::vector<SFLEntry> all;
  all.reserve(candidates.size());
  bool any_positive = false;
  for (const auto& c : candidates) {
    const double l = learnability(c.success_rate);
    any_positive = any_positive || l > 0.0;
    all.push_back({c.level, c.success_rate, l});
  }
  if (any_positive) {
    std::erase_if(all, [](const SFLEntry& e) { return e.learnability <= 0.0; });
  }
  std::stable_sort(all.begin(), all.end(), [](const SFLEntry& a, const SFLEntry& b) {
    return a.learnability > b.learnability;
  });
  if (all.size() > static_cast<std::size_t>(cfg_.buffer_size)) {
    all.resize(static_cast<std::size_t>(cfg_.buffer_size));
  }
  entries_ = std::move(all);
}

bool SFLBuffer::use_buffer(Rng& rng) const {
  const bool draw = rng.bernoulli(cfg_.sample_ratio);
  return draw && !empty();
}

const Level& SFLBuffer::sample(Rng& rng) const {
  if (empty()) throw EmptyBuffer("sampling from an empty learnability buffer");
  return entries_[rng.below(entries_.size())].level;
}

}  // namespace degen
