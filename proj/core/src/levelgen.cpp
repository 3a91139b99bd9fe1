#include "degen/levelgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "degen/errors.hpp"

namespace degen {

namespace {

constexpr int kMaxSokobanPairs = 10;

std::vector<Pos> interior_positions(const Level& level) {
  std::vector<Pos> out;
  out.reserve(static_cast<std::size_t>(level.interior_cells()));
  for (int r = 1; r < level.height - 1; ++r) {
    for (int c = 1; c < level.width - 1; ++c) out.push_back({r, c});
  }
  return out;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

std::vector<Pos> free_cells(const Level& level) {
  std::vector<Pos> out;
  for (int r = 1; r < level.height - 1; ++r) {
    for (int c = 1; c < level.width - 1; ++c) {
      const Pos p{r, c};
      if (level.at(p) != Cell::Empty) continue;
      if (level.start && level.start->pos == p) continue;
      out.push_back(p);
    }
  }
  return out;
}

int sokoban_pairs(const Level& level) {
  return level.count(Cell::Box) + level.count(Cell::BoxOnStorage);
}

}  // namespace

int resolved_max_walls(const GenConfig& config) {
  if (config.max_walls >= 0) return config.max_walls;
  const int interior = (config.size - 2) * (config.size - 2);
  return static_cast<int>(std::lround(60.0 * interior / 121.0));
}

void validate_gen_config(const GenConfig& config) {
  if (config.size < 4) throw ConfigError("level size must be at least 4");
  const int interior = (config.size - 2) * (config.size - 2);
  if (config.family == Family::Sokoban) {
    if (config.min_boxes < 1 || config.max_boxes < config.min_boxes) {
      throw ConfigError("sokoban box range must satisfy 1 <= min_boxes <= max_boxes");
    }
    if (config.max_boxes > kMaxSokobanPairs) throw ConfigError("at most 10 sokoban boxes");
    if (config.sokoban_walls < 0 || config.sokoban_walls + 2 * config.max_boxes + 1 > interior) {
      throw ConfigError("sokoban walls and boxes exceed interior capacity");
    }
    return;
  }
  const int max_walls = resolved_max_walls(config);
  if (config.min_walls < 0 || max_walls < config.min_walls) {
    throw ConfigError("wall range must satisfy 0 <= min_walls <= max_walls");
  }
  const int entities =
      2 + ((config.family == Family::KeyMinigrid && config.include_key_door) ? 2 : 0);
  if (max_walls + entities > interior) {
    throw ConfigError("wall count " + std::to_string(max_walls) + " plus entities exceeds " +
                      std::to_string(interior) + " interior cells");
  }
}

Level random_level(const GenConfig& config, std::uint64_t seed) {
  validate_gen_config(config);
  Rng rng(seed);
  Level level = make_empty_level(config.family, config.size, config.size, config.t_max);
  std::vector<Pos> cells = interior_positions(level);
  shuffle(cells, rng);
  std::size_t next = 0;

  if (config.family == Family::Sokoban) {
    const int boxes = rng.uniform_int(config.min_boxes, config.max_boxes);
    for (int i = 0; i < config.sokoban_walls; ++i) level.at(cells[next++]) = Cell::Wall;
    for (int i = 0; i < boxes; ++i) level.at(cells[next++]) = Cell::Box;
    for (int i = 0; i < boxes; ++i) level.at(cells[next++]) = Cell::Storage;
  } else {
    const int walls = rng.uniform_int(config.min_walls, resolved_max_walls(config));
    for (int i = 0; i < walls; ++i) level.at(cells[next++]) = Cell::Wall;
    level.at(cells[next++]) = Cell::Goal;
    if (config.family == Family::KeyMinigrid && config.include_key_door) {
      level.at(cells[next++]) = Cell::Key;
      level.at(cells[next++]) = Cell::DoorLocked;
    }
  }
  level.start = AgentState{cells[next++], static_cast<Direction>(rng.below(4)), false};
  return level;
}

AgentState sample_start(const Level& level, Rng& rng) {
  std::vector<Pos> cells;
  for (int r = 1; r < level.height - 1; ++r) {
    for (int c = 1; c < level.width - 1; ++c) {
      if (level.at({r, c}) == Cell::Empty) cells.push_back({r, c});
    }
  }
  if (cells.empty()) throw InvalidLevel("no Empty cell for the agent start");
  const Pos p = cells[rng.below(cells.size())];
  return AgentState{p, static_cast<Direction>(rng.below(4)), false};
}

bool apply_mutation(Level& level, MutationKind kind, Rng& rng) {
  switch (kind) {
    case MutationKind::ToggleWall: {
      std::vector<Pos> candidates;
      for (int r = 1; r < level.height - 1; ++r) {
        for (int c = 1; c < level.width - 1; ++c) {
          const Pos p{r, c};
          const Cell cell = level.at(p);
          if (level.start && level.start->pos == p) continue;
          if (cell == Cell::Empty || cell == Cell::Wall) candidates.push_back(p);
        }
      }
      if (candidates.empty()) return false;
      const Pos p = candidates[rng.below(candidates.size())];
      level.at(p) = level.at(p) == Cell::Wall ? Cell::Empty : Cell::Wall;
      return true;
    }
    case MutationKind::MoveEntity: {
      // Entity slots: agent start (-1) or a cell holding Goal/Key/Door.
      std::vector<int> entities;
      if (level.start) entities.push_back(-1);
      for (int i = 0; i < static_cast<int>(level.grid.size()); ++i) {
        const Cell cell = level.grid[static_cast<std::size_t>(i)];
        if (cell == Cell::Goal || cell == Cell::Key || cell == Cell::DoorLocked ||
            cell == Cell::DoorUnlocked) {
          entities.push_back(i);
        }
      }
      const std::vector<Pos> targets = free_cells(level);
      if (entities.empty() || targets.empty()) return false;
      const int which = entities[rng.below(entities.size())];
      const Pos dest = targets[rng.below(targets.size())];
      if (which < 0) {
        level.start->pos = dest;
        level.start->dir = static_cast<Direction>(rng.below(4));
      } else {
        const Pos src = level.pos_of(which);
        level.at(dest) = level.at(src);
        level.at(src) = Cell::Empty;
      }
      return true;
    }
    case MutationKind::AddPair: {
      if (level.family != Family::Sokoban || sokoban_pairs(level) >= kMaxSokobanPairs) return false;
      std::vector<Pos> targets = free_cells(level);
      if (targets.size() < 2) return false;
      const std::size_t a = rng.below(targets.size());
      std::size_t b = rng.below(targets.size() - 1);
      if (b >= a) ++b;
      level.at(targets[a]) = Cell::Box;
      level.at(targets[b]) = Cell::Storage;
      return true;
    }
    case MutationKind::RemovePair: {
      if (level.family != Family::Sokoban || sokoban_pairs(level) <= 1) return false;
      std::vector<int> boxes;
      std::vector<int> storages;
      for (int i = 0; i < static_cast<int>(level.grid.size()); ++i) {
        const Cell cell = level.grid[static_cast<std::size_t>(i)];
        if (cell == Cell::Box || cell == Cell::BoxOnStorage) boxes.push_back(i);
        if (cell == Cell::Storage) storages.push_back(i);
      }
      const int box = boxes[rng.below(boxes.size())];
      auto& box_cell = level.grid[static_cast<std::size_t>(box)];
      if (box_cell == Cell::BoxOnStorage) {
        box_cell = Cell::Empty;
      } else {
        if (storages.empty()) return false;
        box_cell = Cell::Empty;
        level.grid[static_cast<std::size_t>(storages[rng.below(storages.size())])] = Cell::Empty;
      }
      return true;
    }
  }
  return false;
}

Level mutate(const Level& level, int n_edits, std::uint64_t seed) {
  Level out = level;
  if (n_edits <= 0) return out;
  Rng rng(seed);
  std::vector<MutationKind> menu{MutationKind::ToggleWall, MutationKind::MoveEntity};
  if (level.family == Family::Sokoban) {
    menu.push_back(MutationKind::AddPair);
    menu.push_back(MutationKind::RemovePair);
  }
  for (int e = 0; e < n_edits; ++e) {
    // Resample inapplicable edits; a bounded number of tries keeps degenerate
    // levels (e.g. a fully walled interior) from looping forever.
    for (int attempt = 0; attempt < 32; ++attempt) {
      Level candidate = out;
      if (!apply_mutation(candidate, menu[rng.below(menu.size())], rng)) continue;
      if (!is_valid_level(candidate)) continue;
      out = std::move(candidate);
      break;
    }
  }
  return out;
}

Level load_level_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open level file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Level level = parse_level(buf.str());
  return level;
}

std::vector<EvalEntry> load_eval_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open eval manifest '" + manifest_path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), 1, 1);
  }
  if (!doc.is_array()) throw ParseError("manifest must be a JSON list of {name, path}", 1, 1);
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  std::vector<EvalEntry> entries;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("name") || !item.contains("path")) {
      throw ParseError("manifest entries need string fields name and path", 1, 1);
    }
    std::filesystem::path p = item.at("path").get<std::string>();
    if (p.is_relative()) p = base / p;
    EvalEntry entry{item.at("name").get<std::string>(), load_level_file(p.string())};
    validate_level(entry.level);
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace degen
