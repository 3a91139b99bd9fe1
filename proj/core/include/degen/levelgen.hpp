#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "degen/level.hpp"
#include "degen/rng.hpp"

namespace degen {

struct GenConfig {
  Family family = Family::Minigrid;
  int size = 13;                 ///< square side length including the border
  int t_max = 0;                 ///< 0 selects default_t_max
  int min_walls = 0;
  int max_walls = -1;            ///< -1 scales 60 walls at 13x13 by interior area
  bool include_key_door = true;  ///< KeyMinigrid only
  int sokoban_walls = 15;
  int min_boxes = 1;
  int max_boxes = 10;
};

/// Resolved wall cap (applies the area scaling when max_walls is -1).
int resolved_max_walls(const GenConfig& config);

/// Throws ConfigError when entity counts cannot fit the interior.
void validate_gen_config(const GenConfig& config);

/// Domain-randomised level: walls, goal, then key and door, then agent start,
/// each on distinct interior cells. Solvability is not guaranteed.
Level random_level(const GenConfig& config, std::uint64_t seed);

/// Applies `n_edits` random atomic edits. See MutationKind for the menu.
Level mutate(const Level& level, int n_edits, std::uint64_t seed);

enum class MutationKind { ToggleWall, MoveEntity, AddPair, RemovePair };

/// Applies a single edit of the given kind; returns false if it was inapplicable.
bool apply_mutation(Level& level, MutationKind kind, Rng& rng);

/// Uniform start pose over Empty interior cells.
AgentState sample_start(const Level& level, Rng& rng);

/// Eval manifest: JSON list of {name, path}; relative paths resolve against the manifest.
struct EvalEntry {
  std::string name;
  Level level;
};
std::vector<EvalEntry> load_eval_manifest(const std::string& manifest_path);
Level load_level_file(const std::string& path);

}  // namespace degen
