#include "degen/types.hpp"

#include <array>

#include "degen/errors.hpp"

namespace degen {

Pos offset(Direction d) {
  switch (d) {
    case Direction::North: return {-1, 0};
    case Direction::East: return {0, 1};
    case Direction::South: return {1, 0};
    case Direction::West: return {0, -1};
  }
  return {0, 0};
}

Pos advance(Pos p, Direction d, int steps) {
  const Pos o = offset(d);
  return {p.row + steps * o.row, p.col + steps * o.col};
}

Direction turn_left(Direction d) {
  return static_cast<Direction>((static_cast<int>(d) + 3) % 4);
}

Direction turn_right(Direction d) {
  return static_cast<Direction>((static_cast<int>(d) + 1) % 4);
}

namespace {
constexpr std::array kMinigridActions{StudentAction::Forward, StudentAction::TurnLeft,
                                      StudentAction::TurnRight};
constexpr std::array kKeyMinigridActions{StudentAction::Forward, StudentAction::TurnLeft,
                                         StudentAction::TurnRight, StudentAction::Use};
constexpr std::array kSokobanActions{StudentAction::Forward, StudentAction::TurnLeft,
                                     StudentAction::TurnRight, StudentAction::Reset};
}  // namespace

std::span<const StudentAction> student_actions(Family f) {
  switch (f) {
    case Family::Minigrid: return kMinigridActions;
    case Family::KeyMinigrid: return kKeyMinigridActions;
    case Family::Sokoban: return kSokobanActions;
  }
  return kMinigridActions;
}

char cell_char(Cell c) {
  switch (c) {
    case Cell::Empty: return '.';
    case Cell::Wall: return '#';
    case Cell::Goal: return 'G';
    case Cell::Key: return 'K';
    case Cell::DoorLocked: return 'D';
    case Cell::DoorUnlocked: return 'd';
    case Cell::Box: return 'B';
    case Cell::Storage: return 'S';
    case Cell::BoxOnStorage: return '*';
    case Cell::Ungenerated: return '?';
  }
  return '?';
}

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Minigrid: return "minigrid";
    case Family::KeyMinigrid: return "key_minigrid";
    case Family::Sokoban: return "sokoban";
  }
  return "minigrid";
}

std::string_view to_string(StudentAction a) {
  switch (a) {
    case StudentAction::Forward: return "forward";
    case StudentAction::TurnLeft: return "left";
    case StudentAction::TurnRight: return "right";
    case StudentAction::Use: return "use";
    case StudentAction::Reset: return "reset";
  }
  return "forward";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::North: return "north";
    case Direction::East: return "east";
    case Direction::South: return "south";
    case Direction::West: return "west";
  }
  return "north";
}

Family family_from_string(std::string_view s) {
  if (s == "minigrid" || s == "Minigrid") return Family::Minigrid;
  if (s == "key_minigrid" || s == "KeyMinigrid") return Family::KeyMinigrid;
  if (s == "sokoban" || s == "Sokoban") return Family::Sokoban;
  throw ConfigError("unknown family '" + std::string(s) + "'");
}

}  // namespace degen
