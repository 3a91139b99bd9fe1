#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "degen/level.hpp"
#include "degen/types.hpp"

namespace degen {

inline constexpr int kViewSize = 5;
inline constexpr int kViewCells = kViewSize * kViewSize;

/// Mutable episode state. `grid` evolves (keys picked, doors unlocked, boxes
/// pushed); `initial_grid`/`initial_agent` are what the Sokoban reset action restores.
struct EnvState {
  Level level;
  std::vector<Cell> grid;
  AgentState agent;
  std::vector<Cell> initial_grid;
  AgentState initial_agent;
  int t = 0;
  bool done = false;
  bool solved = false;

  Cell at(Pos p) const { return grid[static_cast<std::size_t>(level.index(p))]; }
  Cell& at(Pos p) { return grid[static_cast<std::size_t>(level.index(p))]; }
  int t_max() const { return level.t_max; }
  bool operator==(const EnvState&) const = default;
};

struct Observation {
  std::array<Cell, kViewCells> view{};  ///< row-major, row 0 farthest, agent at (4,2)
  Direction dir = Direction::North;
  bool has_key = false;

  Cell at(int row, int col) const { return view[static_cast<std::size_t>(row * kViewSize + col)]; }
  bool operator==(const Observation&) const = default;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

/// Goal reward for reaching success after T of T_max steps: 1 - 0.9 T / T_max.
double goal_reward(int steps_taken, int t_max);

/// Starts an episode. Without a level start or override, a start is sampled
/// from Empty interior cells with `seed`. Throws InvalidLevel if the start is blocked.
EnvState reset(const Level& level, std::optional<AgentState> start_override = std::nullopt,
               std::uint64_t seed = 0);

/// Advances the state in place. Illegal moves are no-ops that still consume a step.
StepResult step(EnvState& state, StudentAction action);

struct Transition {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};
/// Value-semantics variant of step.
Transition step_copy(const EnvState& state, StudentAction action);

/// World coordinate shown at view cell (row, col) for an agent pose.
Pos view_to_world(const AgentState& agent, int row, int col);

/// Egocentric 5x5 window; out-of-bounds cells read Wall.
Observation observe(const EnvState& state);

/// True iff every in-bounds cell of the agent's window is generated.
bool view_fully_generated(const EnvState& state);

}  // namespace degen
