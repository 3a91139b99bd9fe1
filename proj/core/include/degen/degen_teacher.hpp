#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degen/gridworld.hpp"
#include "degen/level.hpp"
#include "degen/rng.hpp"

namespace degen {

inline constexpr int kTeacherObjects = 5;

/// Cell written by teacher object index `object` (the a2 sub-action).
/// Minigrid family: {Wall, Empty, Goal, Key, DoorLocked}.
/// Sokoban: {Empty, Wall, Box, Storage, BoxOnStorage}.
Cell teacher_object_cell(Family family, int object);

struct TeacherObservation {
  std::array<Cell, kViewCells> view{};
  std::array<bool, kViewCells> gen_mask{};  ///< true where the view cell is Ungenerated
  Direction dir = Direction::North;
  bool has_key = false;
  bool goal_placed = false;
  bool key_placed = false;
  bool door_placed = false;
};

/// (a1, a2): a view cell index in 0..24 and an object index in 0..4.
struct TeacherAction {
  int cell = 0;
  int object = 0;
  bool operator==(const TeacherAction&) const = default;
};

/// Factored legality: a joint action is legal iff both sub-actions are.
struct TeacherMask {
  std::array<bool, kViewCells> cell{};
  std::array<bool, kTeacherObjects> object{};

  int legal_cells() const;
  int legal_objects() const;
  bool any() const { return legal_cells() > 0 && legal_objects() > 0; }
  bool allows(const TeacherAction& a) const;
  /// Number of illegal (a1, a2) pairs.
  int masked_count() const;
};

using TeacherPolicy = std::function<TeacherAction(const TeacherObservation&, const TeacherMask&)>;
using StudentPolicy = std::function<StudentAction(const Observation&)>;

/// One DEGen episode: a partially generated level whose cells are filled
/// as they enter the student's view.
class GenerationState {
 public:
  /// All interior cells Ungenerated, border Wall, random student start (Empty) and heading.
  static GenerationState fresh(Family family, int size, int t_max, Rng& rng);
  /// Wraps an existing state; placement flags are derived from the grid.
  static GenerationState from_env(EnvState env);

  const EnvState& env() const { return env_; }
  bool done() const { return env_.done; }
  bool goal_placed() const { return goal_placed_; }
  bool key_placed() const { return key_placed_; }
  bool door_placed() const { return door_placed_; }

  /// True while the student's window contains an Ungenerated in-bounds cell.
  bool needs_generation() const { return !view_fully_generated(env_); }

  TeacherObservation teacher_observation() const;
  TeacherMask legal_mask() const;

  /// Fills one cell. Throws PolicyError on an illegal action.
  void apply_teacher(const TeacherAction& action);
  /// Takes one student step. Throws PolicyError if generation is pending.
  StepResult apply_student(StudentAction action);

  int teacher_steps() const { return static_cast<int>(burst_log_.size()); }
  int student_steps() const { return env_.t; }
  /// Student step index at which each teacher step happened (nondecreasing).
  const std::vector<int>& burst_log() const { return burst_log_; }

  /// Archived level: never-observed cells become Wall; start is the episode start.
  Level finalize() const;

 private:
  explicit GenerationState(EnvState env);
  void refresh_flags();

  EnvState env_;
  bool goal_placed_ = false;
  bool key_placed_ = false;
  bool door_placed_ = false;
  std::vector<int> burst_log_;
};

struct InterleaveRecord {
  int teacher_steps = 0;
  StudentAction action = StudentAction::Forward;
  StepResult result;
};

/// Teacher fills every Ungenerated cell in view, then the student acts once.
InterleaveRecord interleave_step(GenerationState& state, const TeacherPolicy& teacher,
                                 const StudentPolicy& student);

/// Dense teacher rewards: r_{t_g} = (1/T) sum of G over student steps
/// [T(t_g), T(t_g + 1)), where T(N_g) = T. Student steps before the first
/// teacher step are credited to it. The rewards sum to mean(G).
std::vector<double> assign_dense_rewards(std::span<const double> step_scores,
                                         std::span<const int> burst_log);

/// Fixed categorical prior over object indices: (p_w, p_w, p_g, p_g, p_g)
/// with p_w = (1 - 3 p_g) / 2. Requires 0 < p_g < 1/3.
std::array<double, kTeacherObjects> kl_prior(double p_g);

// Initial Gen: the whole level is generated before the student starts.

struct InitialGenObservation {
  int width = 0;
  int height = 0;
  std::vector<Cell> interior;  ///< row-major interior cells
  int step = 0;
  int n_steps = 0;
  bool goal_placed = false;
  bool key_placed = false;
  bool door_placed = false;
};

struct InitialGenMask {
  std::vector<bool> cell;  ///< over interior cells
  std::array<bool, kTeacherObjects> object{};
  bool any() const;
};

using InitialGenPolicy =
    std::function<TeacherAction(const InitialGenObservation&, const InitialGenMask&)>;

class InitialGenState {
 public:
  InitialGenState(Family family, int size, int t_max, int n_steps);

  bool done() const;
  InitialGenObservation observation() const;
  InitialGenMask legal_mask() const;
  void apply(const TeacherAction& action);
  int steps() const { return steps_; }
  /// Unfilled cells become Empty; the start is sampled over Empty cells.
  Level finalize(Rng& rng) const;

 private:
  Level level_;
  int n_steps_;
  int steps_ = 0;
  bool goal_placed_ = false;
  bool key_placed_ = false;
  bool door_placed_ = false;
};

struct InitialGenResult {
  Level level;
  int steps = 0;
};

InitialGenResult initial_gen_episode(const InitialGenPolicy& teacher, Family family, int size,
                                     int t_max, int n_steps, std::uint64_t seed);

/// Sparse teacher reward: the whole score on the last generation step.
std::vector<double> initial_gen_rewards(int steps, double score);

/// One line of the episode trace dump.
struct TraceRecord {
  bool teacher = false;
  int index = 0;  ///< t_g for teacher rows, t_s for student rows
  TeacherAction teacher_action;
  StudentAction student_action = StudentAction::Forward;
  int masked_count = 0;
  double reward = 0.0;
};

/// JSON lines: {"t_g"|"t_s", "actor", "action", "masked_count", "reward"}.
std::string trace_jsonl(std::span<const TraceRecord> records);

struct DegenEpisode {
  Level level;
  std::vector<TraceRecord> trace;
  std::vector<int> burst_log;
  int student_steps = 0;
  bool solved = false;
  double episode_return = 0.0;
};

/// Runs interleave_step until the episode ends or `max_student_steps` is hit.
DegenEpisode run_degen_episode(GenerationState state, const TeacherPolicy& teacher,
                               const StudentPolicy& student, int max_student_steps);

}  // namespace degen
