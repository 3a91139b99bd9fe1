#include "degen/degen_teacher.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "degen/errors.hpp"

namespace degen {

Cell teacher_object_cell(Family family, int object) {
  static constexpr std::array<Cell, kTeacherObjects> kMinigrid{
      Cell::Wall, Cell::Empty, Cell::Goal, Cell::Key, Cell::DoorLocked};
  static constexpr std::array<Cell, kTeacherObjects> kSokoban{
      Cell::Empty, Cell::Wall, Cell::Box, Cell::Storage, Cell::BoxOnStorage};
  if (object < 0 || object >= kTeacherObjects) throw PolicyError("object index out of range");
  return family == Family::Sokoban ? kSokoban[static_cast<std::size_t>(object)]
                                   : kMinigrid[static_cast<std::size_t>(object)];
}

int TeacherMask::legal_cells() const {
  return static_cast<int>(std::count(cell.begin(), cell.end(), true));
}

int TeacherMask::legal_objects() const {
  return static_cast<int>(std::count(object.begin(), object.end(), true));
}

bool TeacherMask::allows(const TeacherAction& a) const {
  return a.cell >= 0 && a.cell < kViewCells && a.object >= 0 && a.object < kTeacherObjects &&
         cell[static_cast<std::size_t>(a.cell)] && object[static_cast<std::size_t>(a.object)];
}

int TeacherMask::masked_count() const {
  return kViewCells * kTeacherObjects - legal_cells() * legal_objects();
}

namespace {

std::array<bool, kTeacherObjects> object_mask(Family family, bool goal, bool key, bool door) {
  std::array<bool, kTeacherObjects> m{};
  m.fill(true);
  if (family == Family::Sokoban) return m;
  m[2] = !goal;
  m[3] = family == Family::KeyMinigrid && !key;
  m[4] = family == Family::KeyMinigrid && !door;
  return m;
}

}  // namespace

GenerationState::GenerationState(EnvState env) : env_(std::move(env)) { refresh_flags(); }

void GenerationState::refresh_flags() {
  // initial_grid keeps every placement, including keys already picked up.
  const auto& g = env_.initial_grid;
  goal_placed_ = std::find(g.begin(), g.end(), Cell::Goal) != g.end();
  key_placed_ = std::find(g.begin(), g.end(), Cell::Key) != g.end();
  door_placed_ = std::find(g.begin(), g.end(), Cell::DoorLocked) != g.end() ||
                 std::find(g.begin(), g.end(), Cell::DoorUnlocked) != g.end();
}

GenerationState GenerationState::fresh(Family family, int size, int t_max, Rng& rng) {
  Level level = make_empty_level(family, size, size, t_max);
  for (int r = 1; r < size - 1; ++r) {
    for (int c = 1; c < size - 1; ++c) level.at({r, c}) = Cell::Ungenerated;
  }
  const Pos start{1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 2))),
                  1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 2)))};
  level.at(start) = Cell::Empty;
  level.start = AgentState{start, static_cast<Direction>(rng.below(4)), false};
  return GenerationState(reset(level));
}

GenerationState GenerationState::from_env(EnvState env) { return GenerationState(std::move(env)); }

TeacherObservation GenerationState::teacher_observation() const {
  const Observation obs = observe(env_);
  TeacherObservation t;
  t.view = obs.view;
  for (std::size_t i = 0; i < t.view.size(); ++i) t.gen_mask[i] = t.view[i] == Cell::Ungenerated;
  t.dir = obs.dir;
  t.has_key = obs.has_key;
  t.goal_placed = goal_placed_;
  t.key_placed = key_placed_;
  t.door_placed = door_placed_;
  return t;
}

TeacherMask GenerationState::legal_mask() const {
  TeacherMask mask;
  for (int r = 0; r < kViewSize; ++r) {
    for (int c = 0; c < kViewSize; ++c) {
      const Pos p = view_to_world(env_.agent, r, c);
      mask.cell[static_cast<std::size_t>(r * kViewSize + c)] =
          env_.level.in_bounds(p) && env_.at(p) == Cell::Ungenerated;
    }
  }
  mask.object = object_mask(env_.level.family, goal_placed_, key_placed_, door_placed_);
  return mask;
}

void GenerationState::apply_teacher(const TeacherAction& action) {
  if (env_.done) throw PolicyError("teacher acted on a finished episode");
  if (!legal_mask().allows(action)) {
    throw PolicyError("teacher selected masked action (cell " + std::to_string(action.cell) +
                      ", object " + std::to_string(action.object) + ")");
  }
  const Pos p = view_to_world(env_.agent, action.cell / kViewSize, action.cell % kViewSize);
  const Cell cell = teacher_object_cell(env_.level.family, action.object);
  const auto idx = static_cast<std::size_t>(env_.level.index(p));
  env_.grid[idx] = cell;
  env_.initial_grid[idx] = cell;
  env_.level.grid[idx] = cell;
  if (env_.level.family != Family::Sokoban) {
    goal_placed_ = goal_placed_ || cell == Cell::Goal;
    key_placed_ = key_placed_ || cell == Cell::Key;
    door_placed_ = door_placed_ || cell == Cell::DoorLocked;
  }
  burst_log_.push_back(env_.t);
}

StepResult GenerationState::apply_student(StudentAction action) {
  if (needs_generation()) {
    throw PolicyError("student acted while its view contains ungenerated cells");
  }
  return step(env_, action);
}

Level GenerationState::finalize() const {
  Level level = env_.level;
  level.grid = env_.initial_grid;
  for (Cell& c : level.grid) {
    if (c == Cell::Ungenerated) c = Cell::Wall;
  }
  level.start = env_.initial_agent;
  return level;
}

InterleaveRecord interleave_step(GenerationState& state, const TeacherPolicy& teacher,
                                 const StudentPolicy& student) {
  if (state.done()) throw PolicyError("interleave_step on a finished episode");
  InterleaveRecord rec;
  while (state.needs_generation()) {
    const TeacherMask mask = state.legal_mask();
    state.apply_teacher(teacher(state.teacher_observation(), mask));
    ++rec.teacher_steps;
  }
  rec.action = student(observe(state.env()));
  rec.result = state.apply_student(rec.action);
  return rec;
}

std::vector<double> assign_dense_rewards(std::span<const double> step_scores,
                                         std::span<const int> burst_log) {
  const int T = static_cast<int>(step_scores.size());
  const int n = static_cast<int>(burst_log.size());
  std::vector<double> rewards(static_cast<std::size_t>(n), 0.0);
  if (T == 0) {
    if (n > 0) throw ShapeError("burst log refers to an empty student trajectory");
    return rewards;
  }
  if (n == 0) throw ShapeError("student steps without any generator step");
  for (int i = 0; i < n; ++i) {
    const int b = burst_log[static_cast<std::size_t>(i)];
    if (b < 0 || b > T) throw ShapeError("burst index outside [0, T]");
    if (i > 0 && b < burst_log[static_cast<std::size_t>(i - 1)]) {
      throw ShapeError("burst log must be nondecreasing");
    }
  }
  const double inv_t = 1.0 / static_cast<double>(T);
  for (int i = 0; i < n; ++i) {
    const int lo = i == 0 ? 0 : burst_log[static_cast<std::size_t>(i)];
    const int hi = i + 1 < n ? burst_log[static_cast<std::size_t>(i + 1)] : T;
    double chunk = 0.0;
    for (int t = lo; t < hi; ++t) chunk += step_scores[static_cast<std::size_t>(t)];
    rewards[static_cast<std::size_t>(i)] = chunk * inv_t;
  }
  return rewards;
}

std::array<double, kTeacherObjects> kl_prior(double p_g) {
  if (!(p_g > 0.0 && p_g < 1.0 / 3.0)) throw DomainError("kl_prior requires 0 < p_g < 1/3");
  const double p_w = (1.0 - 3.0 * p_g) / 2.0;
  return {p_w, p_w, p_g, p_g, p_g};
}

bool InitialGenMask::any() const {
  return std::find(cell.begin(), cell.end(), true) != cell.end() &&
         std::find(object.begin(), object.end(), true) != object.end();
}

InitialGenState::InitialGenState(Family family, int size, int t_max, int n_steps)
    : level_(make_empty_level(family, size, size, t_max)), n_steps_(n_steps) {
  for (int r = 1; r < size - 1; ++r) {
    for (int c = 1; c < size - 1; ++c) level_.at({r, c}) = Cell::Ungenerated;
  }
}

bool InitialGenState::done() const {
  return steps_ >= n_steps_ || level_.count(Cell::Ungenerated) == 0;
}

InitialGenObservation InitialGenState::observation() const {
  InitialGenObservation obs;
  obs.width = level_.width - 2;
  obs.height = level_.height - 2;
  for (int r = 1; r < level_.height - 1; ++r) {
    for (int c = 1; c < level_.width - 1; ++c) obs.interior.push_back(level_.at({r, c}));
  }
  obs.step = steps_;
  obs.n_steps = n_steps_;
  obs.goal_placed = goal_placed_;
  obs.key_placed = key_placed_;
  obs.door_placed = door_placed_;
  return obs;
}

InitialGenMask InitialGenState::legal_mask() const {
  InitialGenMask mask;
  for (int r = 1; r < level_.height - 1; ++r) {
    for (int c = 1; c < level_.width - 1; ++c) {
      mask.cell.push_back(level_.at({r, c}) == Cell::Ungenerated);
    }
  }
  mask.object = object_mask(level_.family, goal_placed_, key_placed_, door_placed_);
  return mask;
}

void InitialGenState::apply(const TeacherAction& action) {
  const InitialGenMask mask = legal_mask();
  if (done() || action.cell < 0 || action.cell >= static_cast<int>(mask.cell.size()) ||
      action.object < 0 || action.object >= kTeacherObjects ||
      !mask.cell[static_cast<std::size_t>(action.cell)] ||
      !mask.object[static_cast<std::size_t>(action.object)]) {
    throw PolicyError("initial-gen teacher selected masked action");
  }
  const int inner_w = level_.width - 2;
  const Pos p{1 + action.cell / inner_w, 1 + action.cell % inner_w};
  const Cell cell = teacher_object_cell(level_.family, action.object);
  level_.at(p) = cell;
  if (level_.family != Family::Sokoban) {
    goal_placed_ = goal_placed_ || cell == Cell::Goal;
    key_placed_ = key_placed_ || cell == Cell::Key;
    door_placed_ = door_placed_ || cell == Cell::DoorLocked;
  }
  ++steps_;
}

Level InitialGenState::finalize(Rng& rng) const {
  Level level = level_;
  for (Cell& c : level.grid) {
    if (c == Cell::Ungenerated) c = Cell::Empty;
  }
  std::vector<Pos> empties;
  for (int r = 1; r < level.height - 1; ++r) {
    for (int c = 1; c < level.width - 1; ++c) {
      if (level.at({r, c}) == Cell::Empty) empties.push_back({r, c});
    }
  }
  if (empties.empty()) {
    // Fully occupied interior: clear one cell so the student has somewhere to stand.
    const Pos p{1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(level.height - 2))),
                1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(level.width - 2)))};
    level.at(p) = Cell::Empty;
    empties.push_back(p);
  }
  level.start = AgentState{empties[rng.below(empties.size())], static_cast<Direction>(rng.below(4)),
                           false};
  return level;
}

InitialGenResult initial_gen_episode(const InitialGenPolicy& teacher, Family family, int size,
                                     int t_max, int n_steps, std::uint64_t seed) {
  InitialGenState state(family, size, t_max, n_steps);
  while (!state.done()) state.apply(teacher(state.observation(), state.legal_mask()));
  Rng rng(seed);
  return {state.finalize(rng), state.steps()};
}

std::vector<double> initial_gen_rewards(int steps, double score) {
  std::vector<double> r(static_cast<std::size_t>(std::max(steps, 0)), 0.0);
  if (!r.empty()) r.back() = score;
  return r;
}

std::string trace_jsonl(std::span<const TraceRecord> records) {
  std::ostringstream out;
  for (const auto& rec : records) {
    nlohmann::json j;
    if (rec.teacher) {
      j["t_g"] = rec.index;
      j["actor"] = "teacher";
      j["action"] = {rec.teacher_action.cell, rec.teacher_action.object};
    } else {
      j["t_s"] = rec.index;
      j["actor"] = "student";
      j["action"] = std::string(to_string(rec.student_action));
    }
    j["masked_count"] = rec.masked_count;
    j["reward"] = rec.reward;
    out << j.dump() << '\n';
  }
  return out.str();
}

DegenEpisode run_degen_episode(GenerationState state, const TeacherPolicy& teacher,
                               const StudentPolicy& student, int max_student_steps) {
  DegenEpisode ep;
  while (!state.done() && state.student_steps() < max_student_steps) {
    while (state.needs_generation()) {
      const TeacherMask mask = state.legal_mask();
      const TeacherAction a = teacher(state.teacher_observation(), mask);
      TraceRecord rec;
      rec.teacher = true;
      rec.index = state.teacher_steps();
      rec.teacher_action = a;
      rec.masked_count = mask.masked_count();
      state.apply_teacher(a);
      ep.trace.push_back(rec);
    }
    TraceRecord rec;
    rec.index = state.student_steps();
    rec.student_action = student(observe(state.env()));
    const StepResult r = state.apply_student(rec.student_action);
    rec.reward = r.reward;
    ep.episode_return += r.reward;
    ep.trace.push_back(rec);
  }
  ep.level = state.finalize();
  ep.burst_log = state.burst_log();
  ep.student_steps = state.student_steps();
  ep.solved = state.env().solved;
  return ep;
}

}  // namespace degen
