#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace degen {

enum class Cell : std::uint8_t {
  Empty,
  Wall,
  Goal,
  Key,
  DoorLocked,
  DoorUnlocked,
  Box,
  Storage,
  BoxOnStorage,
  Ungenerated,
};
inline constexpr int kNumCellKinds = 10;

enum class Direction : std::uint8_t { North, East, South, West };

enum class Family : std::uint8_t { Minigrid, KeyMinigrid, Sokoban };

enum class StudentAction : std::uint8_t { Forward, TurnLeft, TurnRight, Use, Reset };

struct Pos {
  int row = 0;
  int col = 0;
  auto operator<=>(const Pos&) const = default;
};

Pos offset(Direction d);
Pos advance(Pos p, Direction d, int steps = 1);
Direction turn_left(Direction d);
Direction turn_right(Direction d);

/// Fixed per-family student action set; index i of the policy head maps to element i.
std::span<const StudentAction> student_actions(Family f);

char cell_char(Cell c);
std::string_view to_string(Family f);
std::string_view to_string(StudentAction a);
std::string_view to_string(Direction d);
Family family_from_string(std::string_view s);

}  // namespace degen
