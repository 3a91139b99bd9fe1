#include "degen/gridworld.hpp"

#include <algorithm>

#include "degen/errors.hpp"
#include "degen/rng.hpp"

namespace degen {

double goal_reward(int steps_taken, int t_max) {
  if (t_max <= 0) throw DomainError("T_max must be positive");
  if (steps_taken <= 0 || steps_taken > t_max) {
    throw DomainError("goal_reward requires 0 < T <= T_max (T=" + std::to_string(steps_taken) +
                      ", T_max=" + std::to_string(t_max) + ")");
  }
  // (10 T_max - 9 T) / (10 T_max): one rounding, so T = T_max gives exactly 0.1.
  const auto m = static_cast<long long>(t_max);
  return static_cast<double>(10 * m - 9 * static_cast<long long>(steps_taken)) /
         static_cast<double>(10 * m);
}

EnvState reset(const Level& level, std::optional<AgentState> start_override, std::uint64_t seed) {
  if (static_cast<int>(level.grid.size()) != level.width * level.height) {
    throw InvalidLevel("grid size does not match width*height");
  }
  EnvState state;
  state.level = level;
  state.grid = level.grid;

  AgentState start;
  if (start_override) {
    start = *start_override;
  } else if (level.start) {
    start = *level.start;
  } else {
    std::vector<Pos> empties;
    for (int r = 1; r < level.height - 1; ++r) {
      for (int c = 1; c < level.width - 1; ++c) {
        if (level.at({r, c}) == Cell::Empty) empties.push_back({r, c});
      }
    }
    if (empties.empty()) throw InvalidLevel("no Empty cell available for the agent start");
    Rng rng(seed);
    start.pos = empties[rng.below(empties.size())];
    start.dir = static_cast<Direction>(rng.below(4));
  }
  start.has_key = false;
  if (!level.in_bounds(start.pos)) throw InvalidLevel("agent start out of bounds");
  if (level.at(start.pos) != Cell::Empty) throw InvalidLevel("agent start cell is blocked");

  state.agent = start;
  state.initial_agent = start;
  state.initial_grid = state.grid;
  state.t = 0;
  return state;
}

namespace {

bool passable(Cell c) {
  return c == Cell::Empty || c == Cell::DoorUnlocked || c == Cell::Storage || c == Cell::Goal ||
         c == Cell::Key;
}

bool all_boxes_stored(const EnvState& s) {
  return std::find(s.grid.begin(), s.grid.end(), Cell::Box) == s.grid.end();
}

}  // namespace

StepResult step(EnvState& s, StudentAction action) {
  if (s.done) throw DomainError("step called on a finished episode");
  s.t += 1;
  bool success = false;

  switch (action) {
    case StudentAction::Forward: {
      const Pos target = advance(s.agent.pos, s.agent.dir);
      if (!s.level.in_bounds(target)) break;
      const Cell cell = s.at(target);
      if (cell == Cell::Box || cell == Cell::BoxOnStorage) {
        const Pos beyond = advance(target, s.agent.dir);
        if (!s.level.in_bounds(beyond)) break;
        const Cell dest = s.at(beyond);
        if (dest != Cell::Empty && dest != Cell::Storage) break;
        s.at(beyond) = dest == Cell::Storage ? Cell::BoxOnStorage : Cell::Box;
        s.at(target) = cell == Cell::BoxOnStorage ? Cell::Storage : Cell::Empty;
        s.agent.pos = target;
        success = s.level.family == Family::Sokoban && all_boxes_stored(s);
        break;
      }
      if (!passable(cell)) break;
      s.agent.pos = target;
      if (cell == Cell::Key) {
        s.agent.has_key = true;
        s.at(target) = Cell::Empty;
      } else if (cell == Cell::Goal) {
        success = true;
      }
      break;
    }
    case StudentAction::TurnLeft: s.agent.dir = turn_left(s.agent.dir); break;
    case StudentAction::TurnRight: s.agent.dir = turn_right(s.agent.dir); break;
    case StudentAction::Use: {
      if (s.level.family != Family::KeyMinigrid || !s.agent.has_key) break;
      const Pos target = advance(s.agent.pos, s.agent.dir);
      if (s.level.in_bounds(target) && s.at(target) == Cell::DoorLocked) {
        s.at(target) = Cell::DoorUnlocked;
      }
      break;
    }
    case StudentAction::Reset: {
      if (s.level.family != Family::Sokoban) break;
      s.grid = s.initial_grid;
      s.agent = s.initial_agent;
      break;
    }
  }

  StepResult result;
  if (success) {
    result.reward = goal_reward(s.t, s.t_max());
    s.solved = true;
    s.done = true;
  } else if (s.t >= s.t_max()) {
    s.done = true;
  }
  result.done = s.done;
  return result;
}

Transition step_copy(const EnvState& state, StudentAction action) {
  Transition tr{state, 0.0, false};
  const StepResult r = step(tr.state, action);
  tr.reward = r.reward;
  tr.done = r.done;
  return tr;
}

Pos view_to_world(const AgentState& agent, int row, int col) {
  const int forward = (kViewSize - 1) - row;
  const int lateral = col - kViewSize / 2;
  const Pos f = offset(agent.dir);
  const Pos r = offset(turn_right(agent.dir));
  return {agent.pos.row + forward * f.row + lateral * r.row,
          agent.pos.col + forward * f.col + lateral * r.col};
}

Observation observe(const EnvState& s) {
  Observation obs;
  obs.dir = s.agent.dir;
  obs.has_key = s.agent.has_key;
  for (int r = 0; r < kViewSize; ++r) {
    for (int c = 0; c < kViewSize; ++c) {
      const Pos p = view_to_world(s.agent, r, c);
      obs.view[static_cast<std::size_t>(r * kViewSize + c)] =
          s.level.in_bounds(p) ? s.at(p) : Cell::Wall;
    }
  }
  return obs;
}

bool view_fully_generated(const EnvState& s) {
  for (int r = 0; r < kViewSize; ++r) {
    for (int c = 0; c < kViewSize; ++c) {
      const Pos p = view_to_world(s.agent, r, c);
      if (s.level.in_bounds(p) && s.at(p) == Cell::Ungenerated) return false;
    }
  }
  return true;
}

}  // namespace degen
