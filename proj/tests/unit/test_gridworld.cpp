#include <gtest/gtest.h>

#include "degen/errors.hpp"
#include "degen/gridworld.hpp"

using namespace degen;

namespace {

Level level_from(std::string_view text) { return parse_level(text); }

}  // namespace

TEST(GoalReward, LinearInSteps) {
  EXPECT_EQ(goal_reward(98, 98), 0.1);
  EXPECT_DOUBLE_EQ(goal_reward(1, 10), 0.91);
  EXPECT_DOUBLE_EQ(goal_reward(5, 10), 0.55);
  for (int t = 1; t < 50; ++t) EXPECT_GT(goal_reward(t, 50), goal_reward(t + 1, 50));
  EXPECT_THROW(goal_reward(0, 10), DomainError);
  EXPECT_THROW(goal_reward(11, 10), DomainError);
  EXPECT_THROW(goal_reward(1, 0), DomainError);
}

TEST(Gridworld, ForwardIntoWallIsANoOpThatCostsAStep) {
  EnvState s = reset(level_from("4 3 minigrid 10\n####\n#^G#\n####\n"));
  const StepResult r = step(s, StudentAction::Forward);
  EXPECT_EQ(s.agent.pos, (Pos{1, 1}));
  EXPECT_EQ(s.t, 1);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
}

TEST(Gridworld, ReachingGoalPaysTimeDiscountedReward) {
  EnvState s = reset(level_from("5 3 minigrid 10\n#####\n#^.G#\n#####\n"));
  step(s, StudentAction::TurnRight);
  EXPECT_EQ(s.agent.dir, Direction::East);
  step(s, StudentAction::Forward);
  const StepResult r = step(s, StudentAction::Forward);
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(s.solved);
  EXPECT_DOUBLE_EQ(r.reward, 1.0 - 0.9 * 3.0 / 10.0);
  EXPECT_THROW(step(s, StudentAction::Forward), DomainError);
}

TEST(Gridworld, TimeoutEndsUnsolved) {
  EnvState s = reset(level_from("5 3 minigrid 2\n#####\n#^.G#\n#####\n"));
  EXPECT_FALSE(step(s, StudentAction::TurnLeft).done);
  const StepResult r = step(s, StudentAction::TurnLeft);
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(s.solved);
  EXPECT_EQ(r.reward, 0.0);
}

TEST(Gridworld, KeyUnlocksDoor) {
  EnvState s = reset(level_from("6 3 key_minigrid 50\n######\n#>KDG#\n######\n"));
  step(s, StudentAction::Use);  // no key yet
  step(s, StudentAction::Forward);
  EXPECT_TRUE(s.agent.has_key);
  EXPECT_EQ(s.at({1, 2}), Cell::Empty);
  step(s, StudentAction::Forward);  // locked door blocks
  EXPECT_EQ(s.agent.pos, (Pos{1, 2}));
  step(s, StudentAction::Use);
  EXPECT_EQ(s.at({1, 3}), Cell::DoorUnlocked);
  step(s, StudentAction::Forward);
  EXPECT_EQ(s.agent.pos, (Pos{1, 3}));
  EXPECT_TRUE(step(s, StudentAction::Forward).done);
  EXPECT_TRUE(s.solved);
}

TEST(Gridworld, UseDoesNothingWithoutKeyOrOutsideKeyFamily) {
  EnvState s = reset(level_from("5 3 key_minigrid 50\n#####\n#>DG#\n#####\n"));
  step(s, StudentAction::Use);
  EXPECT_EQ(s.at({1, 2}), Cell::DoorLocked);
}

TEST(Gridworld, SokobanPushesAndResets) {
  const Level level = level_from("7 3 sokoban 50\n#######\n#>B.S.#\n#######\n");
  EnvState s = reset(level);
  step(s, StudentAction::Forward);
  EXPECT_EQ(s.at({1, 3}), Cell::Box);
  EXPECT_EQ(s.agent.pos, (Pos{1, 2}));
  step(s, StudentAction::Reset);
  EXPECT_EQ(s.grid, level.grid);
  EXPECT_EQ(s.agent.pos, (Pos{1, 1}));
  EXPECT_EQ(s.t, 2);  // reset consumes a step and keeps the clock
  step(s, StudentAction::Forward);
  const StepResult r = step(s, StudentAction::Forward);
  EXPECT_EQ(s.at({1, 4}), Cell::BoxOnStorage);
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(s.solved);
  EXPECT_DOUBLE_EQ(r.reward, goal_reward(4, 50));
}

TEST(Gridworld, BoxesBlockAgainstWallsAndBoxes) {
  EnvState s = reset(level_from("6 3 sokoban 50\n######\n#>BB.#\n######\n"));
  step(s, StudentAction::Forward);
  EXPECT_EQ(s.agent.pos, (Pos{1, 1}));
  EnvState w = reset(level_from("5 3 sokoban 50\n#####\n#.>B#\n#####\n"));
  step(w, StudentAction::Forward);
  EXPECT_EQ(w.agent.pos, (Pos{1, 2}));
}

TEST(Gridworld, BoxLeavingStorageRestoresStorage) {
  EnvState s = reset(level_from("6 3 sokoban 50\n######\n#>*.S#\n######\n"));
  step(s, StudentAction::Forward);
  EXPECT_EQ(s.at({1, 2}), Cell::Storage);
  EXPECT_EQ(s.at({1, 3}), Cell::Box);
  EXPECT_FALSE(s.solved);
}

TEST(Gridworld, ResetValidatesStart) {
  const Level level = level_from("5 3 minigrid 10\n#####\n#.#G#\n#####\n");
  EXPECT_THROW(reset(level, AgentState{{1, 2}, Direction::North, false}), InvalidLevel);
  const EnvState a = reset(level, std::nullopt, 7);
  const EnvState b = reset(level, std::nullopt, 7);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.agent.pos, (Pos{1, 1}));
}

TEST(Gridworld, StepCopyLeavesInputUntouched) {
  const EnvState s = reset(level_from("4 3 minigrid 10\n####\n#>G#\n####\n"));
  const Transition tr = step_copy(s, StudentAction::Forward);
  EXPECT_EQ(s.t, 0);
  EXPECT_TRUE(tr.done);
  EXPECT_GT(tr.reward, 0.0);
}

TEST(Observation, ViewMapsEgocentrically) {
  const AgentState north{{5, 5}, Direction::North, false};
  EXPECT_EQ(view_to_world(north, 4, 2), (Pos{5, 5}));
  EXPECT_EQ(view_to_world(north, 0, 2), (Pos{1, 5}));
  EXPECT_EQ(view_to_world(north, 4, 0), (Pos{5, 3}));
  const AgentState east{{5, 5}, Direction::East, false};
  EXPECT_EQ(view_to_world(east, 0, 2), (Pos{5, 9}));
  EXPECT_EQ(view_to_world(east, 4, 0), (Pos{3, 5}));
  const AgentState south{{5, 5}, Direction::South, false};
  EXPECT_EQ(view_to_world(south, 0, 2), (Pos{9, 5}));
  EXPECT_EQ(view_to_world(south, 4, 0), (Pos{5, 7}));
  const AgentState west{{5, 5}, Direction::West, false};
  EXPECT_EQ(view_to_world(west, 0, 2), (Pos{5, 1}));
  EXPECT_EQ(view_to_world(west, 4, 4), (Pos{3, 5}));
}

TEST(Observation, OutOfBoundsReadsWall) {
  const EnvState s = reset(level_from("5 5 minigrid 10\n#####\n#^..#\n#...#\n#..G#\n#####\n"));
  const Observation obs = observe(s);
  for (int c = 0; c < kViewSize; ++c) {
    EXPECT_EQ(obs.at(0, c), Cell::Wall);
    EXPECT_EQ(obs.at(1, c), Cell::Wall);
    EXPECT_EQ(obs.at(2, c), Cell::Wall);
  }
  EXPECT_EQ(obs.at(4, 2), Cell::Empty);
  EXPECT_EQ(obs.at(4, 4), Cell::Empty);
  EXPECT_EQ(obs.dir, Direction::North);
}

TEST(Observation, RotatesWithHeading) {
  EnvState s = reset(level_from("7 7 minigrid 50\n#######\n#.....#\n#.....#\n#..^..#\n#.....#\n#...G.#\n#######\n"));
  // Goal is two rows down and one column right of the agent.
  step(s, StudentAction::TurnRight);
  step(s, StudentAction::TurnRight);
  const Observation south = observe(s);
  EXPECT_EQ(south.at(2, 1), Cell::Goal);  // facing south, east is on the left
  step(s, StudentAction::TurnLeft);
  const Observation east = observe(s);
  EXPECT_EQ(east.at(3, 4), Cell::Goal);
}
