#include "degen/solvability.hpp"

#include <array>
#include <deque>
#include <vector>

#include "degen/errors.hpp"

namespace degen {

bool bfs_solvable(const Level& level) {
  if (level.family == Family::Sokoban) {
    throw DomainError("exact solvability is only defined for minigrid-family levels");
  }
  if (level.count(Cell::Goal) == 0) throw NoGoal("level has no goal");
  if (!level.start) throw InvalidLevel("level has no agent start");

  const int cells = level.width * level.height;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(cells) * 2, 0);
  auto id = [&](Pos p, bool key) {
    return static_cast<std::size_t>(level.index(p)) * 2 + (key ? 1 : 0);
  };

  std::deque<std::pair<Pos, bool>> frontier;
  frontier.emplace_back(level.start->pos, false);
  seen[id(level.start->pos, false)] = 1;
  constexpr std::array dirs{Direction::North, Direction::East, Direction::South, Direction::West};

  while (!frontier.empty()) {
    const auto [pos, has_key] = frontier.front();
    frontier.pop_front();
    for (Direction d : dirs) {
      const Pos next = advance(pos, d);
      if (!level.in_bounds(next)) continue;
      bool key = has_key;
      switch (level.at(next)) {
        case Cell::Goal: return true;
        case Cell::Empty:
        case Cell::DoorUnlocked: break;
        case Cell::Key: key = true; break;
        case Cell::DoorLocked:
          if (!has_key) continue;
          break;
        default: continue;
      }
      if (seen[id(next, key)]) continue;
      seen[id(next, key)] = 1;
      frontier.emplace_back(next, key);
    }
  }
  return false;
}

int approx_solvable(const SolveRecord& history) { return history.successes > 0 ? 1 : 0; }

}  // namespace degen
