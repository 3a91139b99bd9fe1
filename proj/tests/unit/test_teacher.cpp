#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "degen/degen_teacher.hpp"
#include "degen/errors.hpp"

using namespace degen;

namespace {

TeacherPolicy random_teacher(Rng& rng) {
  return [&rng](const TeacherObservation&, const TeacherMask& mask) {
    std::vector<int> cells, objects;
    for (int i = 0; i < kViewCells; ++i) {
      if (mask.cell[static_cast<std::size_t>(i)]) cells.push_back(i);
    }
    for (int i = 0; i < kTeacherObjects; ++i) {
      if (mask.object[static_cast<std::size_t>(i)]) objects.push_back(i);
    }
    return TeacherAction{cells[rng.below(cells.size())], objects[rng.below(objects.size())]};
  };
}

StudentPolicy random_student(Rng& rng, Family family) {
  return [&rng, family](const Observation&) {
    const auto actions = student_actions(family);
    return actions[rng.below(actions.size())];
  };
}

}  // namespace

TEST(Teacher, ObjectTable) {
  EXPECT_EQ(teacher_object_cell(Family::Minigrid, 0), Cell::Wall);
  EXPECT_EQ(teacher_object_cell(Family::KeyMinigrid, 4), Cell::DoorLocked);
  EXPECT_EQ(teacher_object_cell(Family::Sokoban, 2), Cell::Box);
  EXPECT_THROW(teacher_object_cell(Family::Minigrid, 5), PolicyError);
}

TEST(Teacher, FreshEpisodeNeedsGeneration) {
  Rng rng(1);
  GenerationState state = GenerationState::fresh(Family::KeyMinigrid, 9, 0, rng);
  EXPECT_TRUE(state.needs_generation());
  EXPECT_EQ(state.env().level.count(Cell::Ungenerated), 7 * 7 - 1);
  EXPECT_THROW(state.apply_student(StudentAction::Forward), PolicyError);

  const TeacherMask mask = state.legal_mask();
  EXPECT_TRUE(mask.any());
  const TeacherObservation obs = state.teacher_observation();
  for (int i = 0; i < kViewCells; ++i) {
    EXPECT_EQ(mask.cell[static_cast<std::size_t>(i)], obs.gen_mask[static_cast<std::size_t>(i)]);
  }
  EXPECT_FALSE(mask.cell[static_cast<std::size_t>(4 * kViewSize + 2)]);  // agent cell
  EXPECT_EQ(mask.legal_objects(), 5);
  EXPECT_EQ(mask.masked_count(), 125 - 5 * mask.legal_cells());
}

TEST(Teacher, PlacedEntitiesAreMaskedOut) {
  Rng rng(2);
  GenerationState state = GenerationState::fresh(Family::KeyMinigrid, 9, 0, rng);
  const TeacherMask first = state.legal_mask();
  int cell = 0;
  while (!first.cell[static_cast<std::size_t>(cell)]) ++cell;
  state.apply_teacher({cell, 2});
  EXPECT_TRUE(state.goal_placed());
  const TeacherMask after = state.legal_mask();
  EXPECT_FALSE(after.object[2]);
  EXPECT_TRUE(after.object[3]);
  EXPECT_FALSE(after.cell[static_cast<std::size_t>(cell)]);
  EXPECT_THROW(state.apply_teacher({cell, 0}), PolicyError);
  EXPECT_EQ(state.burst_log(), std::vector<int>{0});

  GenerationState plain = GenerationState::fresh(Family::Minigrid, 9, 0, rng);
  const TeacherMask m = plain.legal_mask();
  EXPECT_FALSE(m.object[3]);
  EXPECT_FALSE(m.object[4]);
}

TEST(Teacher, InterleaveFillsViewThenStudentActs) {
  Rng rng(3);
  GenerationState state = GenerationState::fresh(Family::KeyMinigrid, 13, 0, rng);
  const int pending = state.legal_mask().legal_cells();
  const InterleaveRecord rec = interleave_step(state, random_teacher(rng),
                                               random_student(rng, Family::KeyMinigrid));
  EXPECT_EQ(rec.teacher_steps, pending);
  EXPECT_EQ(state.student_steps(), 1);
  EXPECT_EQ(state.teacher_steps(), pending);
  for (int b : state.burst_log()) EXPECT_EQ(b, 0);
}

TEST(Teacher, RandomEpisodesKeepInvariants) {
  Rng rng(4);
  for (int ep = 0; ep < 200; ++ep) {
    const Family family = ep % 3 == 0 ? Family::Minigrid
                                      : (ep % 3 == 1 ? Family::KeyMinigrid : Family::Sokoban);
    GenerationState state = GenerationState::fresh(family, 7 + 2 * (ep % 4), 0, rng);
    const DegenEpisode out =
        run_degen_episode(state, random_teacher(rng), random_student(rng, family), 200);
    EXPECT_LE(out.level.count(Cell::Goal), 1);
    EXPECT_LE(out.level.count(Cell::Key), 1);
    EXPECT_LE(out.level.count(Cell::DoorLocked) + out.level.count(Cell::DoorUnlocked), 1);
    EXPECT_EQ(out.level.count(Cell::Ungenerated), 0);
    EXPECT_TRUE(std::is_sorted(out.burst_log.begin(), out.burst_log.end()));
    EXPECT_LE(out.student_steps, 200);
    if (family != Family::Sokoban) {
      EXPECT_TRUE(is_valid_level(out.level));
    }
  }
}

TEST(Teacher, FinalizeWallsUnseenCells) {
  Rng rng(5);
  GenerationState state = GenerationState::fresh(Family::Minigrid, 13, 0, rng);
  interleave_step(state, random_teacher(rng), random_student(rng, Family::Minigrid));
  const Level level = state.finalize();
  EXPECT_EQ(level.count(Cell::Ungenerated), 0);
  ASSERT_TRUE(level.start.has_value());
  EXPECT_EQ(*level.start, state.env().initial_agent);
  EXPECT_TRUE(is_valid_level(level));
}

TEST(DenseRewards, WorkedExample) {
  const std::vector<double> g{1.0, 2.0, 3.0, 4.0};
  const auto r = assign_dense_rewards(g, std::vector<int>{0, 0, 2, 3});
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0], 0.0);
  EXPECT_DOUBLE_EQ(r[1], 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(r[2], 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(r[3], 4.0 / 4.0);
}

TEST(DenseRewards, EarlyStudentStepsGoToFirstTeacherStep) {
  const auto r = assign_dense_rewards(std::vector<double>{1.0, 1.0, 1.0, 1.0},
                                      std::vector<int>{1, 3});
  EXPECT_DOUBLE_EQ(r[0], 0.75);
  EXPECT_DOUBLE_EQ(r[1], 0.25);
}

TEST(DenseRewards, TrailingBurstAfterLastStudentStepGetsNothing) {
  const auto r = assign_dense_rewards(std::vector<double>{2.0, 4.0}, std::vector<int>{0, 2});
  EXPECT_DOUBLE_EQ(r[0], 3.0);
  EXPECT_EQ(r[1], 0.0);
}

TEST(DenseRewards, Errors) {
  const std::vector<double> g{1.0, 2.0};
  EXPECT_THROW(assign_dense_rewards(g, std::vector<int>{1, 0}), ShapeError);
  EXPECT_THROW(assign_dense_rewards(g, std::vector<int>{0, 3}), ShapeError);
  EXPECT_THROW(assign_dense_rewards(g, std::vector<int>{}), ShapeError);
  EXPECT_TRUE(assign_dense_rewards(std::vector<double>{}, std::vector<int>{}).empty());
}

TEST(KlPrior, ClosedForm) {
  const auto q = kl_prior(0.01);
  EXPECT_EQ(q[0], 0.485);
  EXPECT_EQ(q[1], 0.485);
  EXPECT_EQ(q[2], 0.01);
  EXPECT_EQ(q[3], 0.01);
  EXPECT_EQ(q[4], 0.01);
  EXPECT_THROW(kl_prior(0.0), DomainError);
  EXPECT_THROW(kl_prior(0.34), DomainError);
}

TEST(InitialGen, EpisodeBuildsWholeLevelUpFront) {
  Rng rng(6);
  const InitialGenPolicy teacher = [&rng](const InitialGenObservation& obs,
                                          const InitialGenMask& mask) {
    EXPECT_EQ(static_cast<int>(obs.interior.size()), obs.width * obs.height);
    std::vector<int> cells, objects;
    for (std::size_t i = 0; i < mask.cell.size(); ++i) {
      if (mask.cell[i]) cells.push_back(static_cast<int>(i));
    }
    for (int i = 0; i < kTeacherObjects; ++i) {
      if (mask.object[static_cast<std::size_t>(i)]) objects.push_back(i);
    }
    return TeacherAction{cells[rng.below(cells.size())], objects[rng.below(objects.size())]};
  };
  for (std::uint64_t s = 0; s < 50; ++s) {
    const InitialGenResult res = initial_gen_episode(teacher, Family::KeyMinigrid, 7, 0, 12, s);
    EXPECT_EQ(res.steps, 12);
    EXPECT_TRUE(is_valid_level(res.level)) << serialize_level(res.level);
    ASSERT_TRUE(res.level.start.has_value());
  }
  const InitialGenResult full = initial_gen_episode(teacher, Family::Minigrid, 5, 0, 100, 1);
  EXPECT_EQ(full.steps, 9);
  EXPECT_TRUE(is_valid_level(full.level));

  InitialGenState state(Family::Minigrid, 5, 0, 3);
  EXPECT_THROW(state.apply({9, 0}), PolicyError);
  EXPECT_THROW(state.apply({0, 3}), PolicyError);
}

TEST(InitialGen, SparseReward) {
  EXPECT_EQ(initial_gen_rewards(3, 0.7), (std::vector<double>{0.0, 0.0, 0.7}));
  EXPECT_TRUE(initial_gen_rewards(0, 0.7).empty());
}

TEST(Trace, JsonLinesFields) {
  std::vector<TraceRecord> recs(2);
  recs[0].teacher = true;
  recs[0].teacher_action = {7, 2};
  recs[0].masked_count = 40;
  recs[1].index = 0;
  recs[1].student_action = StudentAction::TurnLeft;
  recs[1].reward = 0.5;
  std::istringstream in(trace_jsonl(recs));
  std::string line;
  std::getline(in, line);
  const auto t = nlohmann::json::parse(line);
  EXPECT_EQ(t.at("actor"), "teacher");
  EXPECT_EQ(t.at("t_g"), 0);
  EXPECT_EQ(t.at("action"), nlohmann::json::array({7, 2}));
  EXPECT_EQ(t.at("masked_count"), 40);
  std::getline(in, line);
  const auto s = nlohmann::json::parse(line);
  EXPECT_EQ(s.at("actor"), "student");
  EXPECT_TRUE(s.contains("t_s"));
  EXPECT_EQ(s.at("reward"), 0.5);
}
