#pragma once

#include "degen/level.hpp"

namespace degen {

/// Exact reachability of the Goal for minigrid-family levels over (pos, has_key).
/// A locked door is passable once the key is held. Throws NoGoal without a
/// Goal, InvalidLevel without an agent start, DomainError for Sokoban.
bool bfs_solvable(const Level& level);

/// Per-level success record; successes never decrease.
struct SolveRecord {
  int attempts = 0;
  int successes = 0;

  void record(bool solved) {
    ++attempts;
    if (solved) ++successes;
  }
  void merge(const SolveRecord& other) {
    attempts += other.attempts;
    successes += other.successes;
  }
  double success_rate() const {
    return attempts == 0 ? 0.0 : static_cast<double>(successes) / attempts;
  }
};

/// 1 iff the level has at least one recorded success, else 0.
int approx_solvable(const SolveRecord& history);

}  // namespace degen
