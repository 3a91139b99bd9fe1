#include "degen/level.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "degen/errors.hpp"

namespace degen {

int Level::count(Cell c) const {
  return static_cast<int>(std::count(grid.begin(), grid.end(), c));
}

int default_t_max(int width, int height) { return 2 * width * height; }

Level make_empty_level(Family family, int width, int height, int t_max) {
  Level level;
  level.width = width;
  level.height = height;
  level.family = family;
  level.t_max = t_max > 0 ? t_max : default_t_max(width, height);
  level.grid.assign(static_cast<std::size_t>(width * height), Cell::Empty);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (level.is_border({r, c})) level.at({r, c}) = Cell::Wall;
    }
  }
  return level;
}

void validate_level(const Level& level, LevelCheck check) {
  if (level.width < 3 || level.height < 3) throw InvalidLevel("level must be at least 3x3");
  if (static_cast<int>(level.grid.size()) != level.width * level.height) {
    throw InvalidLevel("grid size does not match width*height");
  }
  if (level.t_max <= 0) throw InvalidLevel("t_max must be positive");

  for (int r = 0; r < level.height; ++r) {
    for (int c = 0; c < level.width; ++c) {
      const Pos p{r, c};
      const Cell cell = level.at(p);
      if (level.is_border(p) && cell != Cell::Wall) {
        throw InvalidLevel("border cell (" + std::to_string(r) + "," + std::to_string(c) +
                           ") is not a wall");
      }
      if (cell == Cell::Ungenerated && check == LevelCheck::Finalized) {
        throw InvalidLevel("finalized level contains ungenerated cells");
      }
    }
  }

  const int goals = level.count(Cell::Goal);
  const int keys = level.count(Cell::Key);
  const int doors = level.count(Cell::DoorLocked) + level.count(Cell::DoorUnlocked);
  const int boxes = level.count(Cell::Box);
  const int storages = level.count(Cell::Storage);
  const int placed = level.count(Cell::BoxOnStorage);

  switch (level.family) {
    case Family::Minigrid:
      if (keys + doors > 0) throw InvalidLevel("minigrid level contains key or door");
      [[fallthrough]];
    case Family::KeyMinigrid:
      if (goals > 1) throw InvalidLevel("more than one goal");
      if (keys > 1) throw InvalidLevel("more than one key");
      if (doors > 1) throw InvalidLevel("more than one door");
      if (boxes + storages + placed > 0) throw InvalidLevel("minigrid level contains sokoban cells");
      break;
    case Family::Sokoban:
      if (goals + keys + doors > 0) throw InvalidLevel("sokoban level contains goal, key or door");
      if (check == LevelCheck::Finalized && boxes != storages) {
        throw InvalidLevel("sokoban box count " + std::to_string(boxes + placed) +
                           " differs from storage count " + std::to_string(storages + placed));
      }
      break;
  }

  if (level.start) {
    if (!level.in_bounds(level.start->pos)) throw InvalidLevel("agent start out of bounds");
    if (level.at(level.start->pos) != Cell::Empty) throw InvalidLevel("agent start is not Empty");
  }
}

bool is_valid_level(const Level& level, LevelCheck check) {
  try {
    validate_level(level, check);
    return true;
  } catch (const InvalidLevel&) {
    return false;
  }
}

namespace {

bool cell_from_char(char ch, Cell& out) {
  switch (ch) {
    case '.': out = Cell::Empty; return true;
    case '#': out = Cell::Wall; return true;
    case 'G': out = Cell::Goal; return true;
    case 'K': out = Cell::Key; return true;
    case 'D': out = Cell::DoorLocked; return true;
    case 'd': out = Cell::DoorUnlocked; return true;
    case 'B': out = Cell::Box; return true;
    case 'S': out = Cell::Storage; return true;
    case '*': out = Cell::BoxOnStorage; return true;
    case '?': out = Cell::Ungenerated; return true;
    default: return false;
  }
}

bool dir_from_char(char ch, Direction& out) {
  switch (ch) {
    case '^': out = Direction::North; return true;
    case '>': out = Direction::East; return true;
    case 'v': out = Direction::South; return true;
    case '<': out = Direction::West; return true;
    default: return false;
  }
}

char dir_char(Direction d) {
  switch (d) {
    case Direction::North: return '^';
    case Direction::East: return '>';
    case Direction::South: return 'v';
    case Direction::West: return '<';
  }
  return '^';
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    begin = end + 1;
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string_view::npos) {
    lines.pop_back();
  }
  return lines;
}

int parse_int(std::string_view token, int line, int col, const char* what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(std::string("expected integer for ") + what + ", got '" +
                         std::string(token) + "'",
                     line, col);
  }
  return value;
}

}  // namespace

Level parse_level(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty level text", 1, 1);

  // Header: W H family T_max
  std::vector<std::pair<std::string_view, int>> tokens;
  {
    const std::string_view header = lines[0];
    std::size_t i = 0;
    while (i < header.size()) {
      while (i < header.size() && (header[i] == ' ' || header[i] == '\t')) ++i;
      const std::size_t start = i;
      while (i < header.size() && header[i] != ' ' && header[i] != '\t') ++i;
      if (i > start) tokens.emplace_back(header.substr(start, i - start), static_cast<int>(start) + 1);
    }
  }
  if (tokens.size() != 4) throw ParseError("header must be `W H family T_max`", 1, 1);

  Level level;
  level.width = parse_int(tokens[0].first, 1, tokens[0].second, "width");
  level.height = parse_int(tokens[1].first, 1, tokens[1].second, "height");
  try {
    level.family = family_from_string(tokens[2].first);
  } catch (const ConfigError&) {
    throw ParseError("unknown family '" + std::string(tokens[2].first) + "'", 1, tokens[2].second);
  }
  level.t_max = parse_int(tokens[3].first, 1, tokens[3].second, "T_max");
  if (level.width < 3 || level.height < 3) throw ParseError("dimensions must be >= 3", 1, 1);
  if (level.t_max < 0) throw ParseError("T_max must be >= 0", 1, tokens[3].second);
  if (level.t_max == 0) level.t_max = default_t_max(level.width, level.height);

  if (static_cast<int>(lines.size()) - 1 != level.height) {
    throw ParseError("header declares " + std::to_string(level.height) + " rows but body has " +
                         std::to_string(lines.size() - 1),
                     static_cast<int>(lines.size()), 1);
  }

  level.grid.assign(static_cast<std::size_t>(level.width * level.height), Cell::Empty);
  for (int r = 0; r < level.height; ++r) {
    const std::string_view row = lines[static_cast<std::size_t>(r) + 1];
    const int line_no = r + 2;
    if (static_cast<int>(row.size()) != level.width) {
      throw ParseError("row has " + std::to_string(row.size()) + " cells, expected " +
                           std::to_string(level.width),
                       line_no, static_cast<int>(row.size()) + 1);
    }
    for (int c = 0; c < level.width; ++c) {
      const char ch = row[static_cast<std::size_t>(c)];
      Cell cell;
      Direction dir;
      if (cell_from_char(ch, cell)) {
        level.at({r, c}) = cell;
      } else if (dir_from_char(ch, dir)) {
        if (level.start) throw ParseError("more than one agent start", line_no, c + 1);
        level.start = AgentState{{r, c}, dir, false};
        level.at({r, c}) = Cell::Empty;
      } else {
        throw ParseError(std::string("unknown cell character '") + ch + "'", line_no, c + 1);
      }
    }
  }
  return level;
}

std::string serialize_level(const Level& level) {
  std::ostringstream out;
  out << level.width << ' ' << level.height << ' ' << to_string(level.family) << ' '
      << level.t_max << '\n';
  for (int r = 0; r < level.height; ++r) {
    for (int c = 0; c < level.width; ++c) {
      if (level.start && level.start->pos == Pos{r, c}) {
        out << dir_char(level.start->dir);
      } else {
        out << cell_char(level.at({r, c}));
      }
    }
    out << '\n';
  }
  return out.str();
}

std::uint64_t level_hash(const Level& level) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_level(level)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace degen
