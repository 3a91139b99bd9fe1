#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "degen/types.hpp"

namespace degen {

struct AgentState {
  Pos pos;
  Direction dir = Direction::North;
  bool has_key = false;
  bool operator==(const AgentState&) const = default;
};

/// One concrete level: a row-major grid plus an optional agent start.
struct Level {
  int width = 0;
  int height = 0;
  Family family = Family::Minigrid;
  int t_max = 0;
  std::vector<Cell> grid;
  std::optional<AgentState> start;

  bool in_bounds(Pos p) const {
    return p.row >= 0 && p.col >= 0 && p.row < height && p.col < width;
  }
  bool is_border(Pos p) const {
    return p.row == 0 || p.col == 0 || p.row == height - 1 || p.col == width - 1;
  }
  int index(Pos p) const { return p.row * width + p.col; }
  Pos pos_of(int idx) const { return {idx / width, idx % width}; }
  Cell at(Pos p) const { return grid[static_cast<std::size_t>(index(p))]; }
  Cell& at(Pos p) { return grid[static_cast<std::size_t>(index(p))]; }
  int count(Cell c) const;
  int interior_cells() const { return (width - 2) * (height - 2); }

  bool operator==(const Level&) const = default;
};

/// Step budget used when a level does not state one.
int default_t_max(int width, int height);

/// An all-wall-bordered level of Empty interior and no agent.
Level make_empty_level(Family family, int width, int height, int t_max = 0);

enum class LevelCheck {
  Finalized,         ///< no Ungenerated cells, Sokoban boxes balanced
  AllowUngenerated,  ///< partial level inside a generation episode
};

/// Throws InvalidLevel describing the first violated invariant.
void validate_level(const Level& level, LevelCheck check = LevelCheck::Finalized);
bool is_valid_level(const Level& level, LevelCheck check = LevelCheck::Finalized);

/// Text format: header `W H family T_max`, then H rows of W cell characters.
/// Agent start is one of `^ > v <` on an otherwise Empty cell.
Level parse_level(std::string_view text);
std::string serialize_level(const Level& level);

/// FNV-1a of the canonical serialization; the identity used by replay buffers.
std::uint64_t level_hash(const Level& level);

}  // namespace degen
