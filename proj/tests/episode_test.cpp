#include <gtest/gtest.h>

#include <random>

#include "refnav/agents.hpp"
#include "refnav/episode.hpp"
#include "refnav/json_io.hpp"
#include "refnav/scene.hpp"
#include "support.hpp"

using namespace refnav;
using Kind = EpisodeError::Kind;

namespace {

Kind error_kind(Episode& ep, const Action& a) {
  try {
    ep.step(a);
  } catch (const EpisodeError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << describe(a);
  return Kind::kInvalidTask;
}

// Some object visible at the episode's current viewpoint, if any.
std::optional<std::string> any_candidate(const Observation& obs) {
  for (const auto& v : obs.views) {
    if (!v.candidates.empty()) return v.candidates.front().object;
  }
  return std::nullopt;
}

}  // namespace

TEST(StartEpisode, StructuralObservation) {
  const auto w = refnav::testing::synth_world(2);
  for (const auto& t : w.tasks) {
    auto [ep, obs] = start_episode(w.env, t);
    EXPECT_EQ(obs.views.size(), 36u);
    EXPECT_EQ(obs.viewpoint, t.start_viewpoint);
    EXPECT_EQ(obs.step, 0);
    EXPECT_FALSE(obs.navigation_finished);
    EXPECT_EQ(obs.instruction, t.instruction);
    const auto& nbs = w.env.neighbors(w.env.viewpoint_index(t.start_viewpoint));
    ASSERT_EQ(obs.navigable.size(), nbs.size());
    EXPECT_GE(obs.navigable.size(), 1u);
    for (std::size_t i = 0; i < nbs.size(); ++i) {
      EXPECT_EQ(obs.navigable[i].viewpoint, w.env.viewpoints()[nbs[i].index].id);
      EXPECT_NE(obs.navigable[i].viewpoint, t.start_viewpoint);
      EXPECT_EQ(obs.navigable[i].distance, nbs[i].length);
    }
    for (int k = 1; k <= 36; ++k) {
      EXPECT_EQ(obs.views[k - 1].state.index(), k);
      EXPECT_EQ(obs.views[k - 1].candidates, visible_objects(w.env, obs.views[k - 1].state));
      for (const auto& c : obs.views[k - 1].candidates) EXPECT_NE(c.object, t.target_object);
    }
  }
}

TEST(StartEpisode, NeighbourCountOnChain) {
  const auto env = refnav::testing::chain_env();
  Task t{"t", {"go"}, "b", 0, 0, "", {"b"}};
  // chain has no objects; a task needs a target, so only check the engine rejects it
  EXPECT_THROW(Episode(env, t), EpisodeError);
  const auto w = refnav::testing::corridor_world();
  auto task = w.tasks[0];
  task.start_viewpoint = "p2";
  Episode ep(w.env, task);
  EXPECT_EQ(ep.observe().navigable.size(), 2u);
}

TEST(Step, MoveStopDetect) {
  const auto w = refnav::testing::corridor_world();
  Episode ep(w.env, w.tasks[0]);
  auto obs = ep.step(Move{"p1"});
  ASSERT_TRUE(obs);
  EXPECT_EQ(ep.state().path, (std::vector<std::string>{"p0", "p1"}));
  EXPECT_EQ(ep.state().step_count, 1);
  EXPECT_NEAR(obs->heading, std::numbers::pi / 2, 1e-12);
  EXPECT_EQ(obs->elevation, 0.0);
  for (auto vp : {"p2", "p3", "p4"}) ep.step(Move{vp});
  obs = ep.step(Stop{});
  ASSERT_TRUE(obs);
  EXPECT_TRUE(obs->navigation_finished);
  EXPECT_FALSE(ep.state().done);
  EXPECT_EQ(error_kind(ep, Move{"p3"}), Kind::kStepLimit);
  EXPECT_FALSE(ep.step(Detect{CandidateChoice{"t"}}));
  EXPECT_TRUE(ep.state().done);
  const auto tr = ep.trajectory();
  EXPECT_EQ(tr.path.size(), 5u);
  EXPECT_EQ(tr.steps, 4);
  ASSERT_TRUE(tr.detection);
  EXPECT_EQ(std::get<CandidateChoice>(*tr.detection).object, "t");
  EXPECT_EQ(error_kind(ep, Detect{CandidateChoice{"t"}}), Kind::kSecondDetection);
  EXPECT_EQ(error_kind(ep, Stop{}), Kind::kAfterDone);
  EXPECT_EQ(ep.trajectory(), tr);
}

TEST(Step, MoveToCurrentIsStop) {
  const auto w = refnav::testing::corridor_world();
  Episode ep(w.env, w.tasks[0]);
  auto obs = ep.step(Move{"p0"});
  ASSERT_TRUE(obs);
  EXPECT_TRUE(obs->navigation_finished);
  EXPECT_EQ(ep.state().step_count, 0);
  EXPECT_EQ(error_kind(ep, Move{"p0"}), Kind::kIllegalMove);
  // second stop abstains
  EXPECT_FALSE(ep.step(Stop{}));
  EXPECT_TRUE(ep.state().done);
  EXPECT_FALSE(ep.trajectory().detection);
  EXPECT_EQ(error_kind(ep, Detect{CandidateChoice{"s"}}), Kind::kAfterDone);
}

TEST(Step, IllegalMovesLeaveStateUntouched) {
  const auto w = refnav::testing::corridor_world();
  Episode ep(w.env, w.tasks[0]);
  const auto before = ep.trajectory();
  EXPECT_EQ(error_kind(ep, Move{"p2"}), Kind::kIllegalMove);
  EXPECT_EQ(error_kind(ep, Move{"nowhere"}), Kind::kIllegalMove);
  EXPECT_EQ(error_kind(ep, Detect{CandidateChoice{"t"}}), Kind::kInvalidDetection);
  EXPECT_EQ(error_kind(ep, Detect{BBoxOutput{0, {}}}), Kind::kInvalidDetection);
  EXPECT_EQ(error_kind(ep, Detect{BBoxOutput{3, {1, 1, -2, 3}}}), Kind::kInvalidDetection);
  EXPECT_EQ(ep.trajectory(), before);
  EXPECT_FALSE(ep.state().done);
}

TEST(Step, DetectBeforeStopEndsEpisode) {
  const auto w = refnav::testing::corridor_world();
  Episode ep(w.env, w.tasks[0]);
  EXPECT_FALSE(ep.step(Detect{BBoxOutput{5, {10, 10, 5, 5}}}));
  EXPECT_TRUE(ep.state().done);
  EXPECT_EQ(ep.trajectory().path, std::vector<std::string>{"p0"});
}

TEST(Step, StepLimitFinishesNavigation) {
  const auto w = refnav::testing::corridor_world();
  EngineConfig cfg;
  cfg.max_steps = 3;
  Episode ep(w.env, w.tasks[0], cfg);
  ep.step(Move{"p1"});
  ep.step(Move{"p0"});
  auto obs = ep.step(Move{"p1"});
  ASSERT_TRUE(obs);
  EXPECT_TRUE(obs->navigation_finished);
  EXPECT_EQ(error_kind(ep, Move{"p2"}), Kind::kStepLimit);
  EXPECT_FALSE(ep.step(Stop{}));
  EXPECT_TRUE(ep.state().done);
}

// A second Detect always fails, and a Detect at any point ends the episode.
TEST(OneDetectionRule, RandomisedProperty) {
  std::mt19937_64 rng(2024);
  int detected = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto w = refnav::testing::synth_world(seed);
    for (const auto& t : w.tasks) {
      Episode ep(w.env, t);
      auto obs = ep.observe();
      const int walk = static_cast<int>(rng() % 8);
      for (int i = 0; i < walk && !obs.navigable.empty(); ++i) {
        obs = *ep.step(Move{obs.navigable[rng() % obs.navigable.size()].viewpoint});
      }
      if (rng() % 2) obs = *ep.step(Stop{});
      Detection d = BBoxOutput{1 + static_cast<int>(rng() % 36), {10, 10, 20, 20}};
      if (auto c = any_candidate(obs); c && rng() % 2) d = CandidateChoice{*c};
      EXPECT_FALSE(ep.step(Detect{d}));
      ++detected;
      EXPECT_TRUE(ep.state().done);
      EXPECT_EQ(ep.state().detection, d);
      const auto tr = ep.trajectory();
      EXPECT_EQ(error_kind(ep, Detect{d}), Kind::kSecondDetection);
      EXPECT_EQ(error_kind(ep, Detect{BBoxOutput{1, {0, 0, 1, 1}}}), Kind::kSecondDetection);
      EXPECT_EQ(error_kind(ep, Stop{}), Kind::kAfterDone);
      EXPECT_EQ(error_kind(ep, Move{t.start_viewpoint}), Kind::kAfterDone);
      EXPECT_EQ(ep.trajectory(), tr);
    }
  }
  EXPECT_GT(detected, 100);
}

TEST(RunAgent, StopNowStaysPut) {
  const auto w = refnav::testing::synth_world(4);
  StopNowAgent agent;
  const auto trs = run_agent(w.env, w.tasks, agent);
  ASSERT_EQ(trs.size(), w.tasks.size());
  for (std::size_t i = 0; i < trs.size(); ++i) {
    EXPECT_EQ(trs[i].task_id, w.tasks[i].id);
    EXPECT_EQ(trs[i].path.size(), 1u);
    EXPECT_FALSE(trs[i].detection);
  }
}

TEST(RunAgent, ErrorsCarryTaskId) {
  struct Bad : Agent {
    void begin(const Environment&, const Task&) override {}
    Action act(const Observation&) override { return Move{"nowhere"}; }
  } bad;
  const auto w = refnav::testing::corridor_world();
  try {
    run_agent(w.env, w.tasks, bad);
    FAIL();
  } catch (const EpisodeError& e) {
    EXPECT_NE(std::string(e.what()).find("corridor_t0"), std::string::npos);
    EXPECT_EQ(e.kind(), Kind::kIllegalMove);
  }
}

TEST(Replay, ReproducesTrajectories) {
  const auto w = refnav::testing::synth_world(6);
  RandomAgent agent(3);
  for (const auto& tr : run_agent(w.env, w.tasks, agent)) {
    const auto& task = *std::find_if(w.tasks.begin(), w.tasks.end(), [&](const Task& t) { return t.id == tr.task_id; });
    EXPECT_EQ(replay(w.env, task, tr.actions), tr);
  }
}

TEST(TrajectoryFile, RoundTripAndLineNumbers) {
  const auto w = refnav::testing::synth_world(6);
  RandomAgent agent(9);
  const auto trs = run_agent(w.env, w.tasks, agent);
  std::string text;
  for (const auto& t : trs) text += trajectory_to_json_line(t) + "\n";
  EXPECT_EQ(parse_trajectories(text), trs);
  for (const auto& t : trs) EXPECT_EQ(trajectory_from_json(trajectory_to_json(t)), t);

  const std::string broken = trajectory_to_json_line(trs[0]) + "\n\n" + trajectory_to_json_line(trs[1]) + "\n{\"task_id\": 3\n";
  try {
    parse_trajectories(broken);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(WireJson, ObservationRoundTrip) {
  const auto w = refnav::testing::synth_world(6);
  auto [ep, obs] = start_episode(w.env, w.tasks[0]);
  const auto back = observation_from_json(observation_to_json(obs));
  EXPECT_EQ(back.viewpoint, obs.viewpoint);
  EXPECT_EQ(back.instruction, obs.instruction);
  ASSERT_EQ(back.views.size(), 36u);
  for (int k = 0; k < 36; ++k) {
    EXPECT_EQ(back.views[k].state, obs.views[k].state);
    EXPECT_EQ(back.views[k].candidates, obs.views[k].candidates);
    EXPECT_EQ(back.views[k].feature, obs.views[k].feature);
  }
  ASSERT_EQ(back.navigable.size(), obs.navigable.size());
  for (std::size_t i = 0; i < obs.navigable.size(); ++i) {
    EXPECT_EQ(back.navigable[i].viewpoint, obs.navigable[i].viewpoint);
    EXPECT_EQ(back.navigable[i].rel_heading, obs.navigable[i].rel_heading);
  }
  for (const Action& a : {Action{Move{"x"}}, Action{Stop{}}, Action{Detect{CandidateChoice{"o"}}},
                          Action{Detect{BBoxOutput{7, {1.5, 2.25, 3, 4}}}}})
    EXPECT_EQ(action_from_json(action_to_json(a)), a);
}

TEST(Episode, DoesNotMutateEnvironment) {
  const auto w = refnav::testing::synth_world(12);
  const std::string before = environment_to_json(w.env);
  RandomAgent agent(1);
  run_agent(w.env, w.tasks, agent);
  EXPECT_EQ(environment_to_json(w.env), before);
}
