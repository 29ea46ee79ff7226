#include <doctest.h>

#include <stdexcept>

#include <set>

#include "llmens/env.hpp"
#include "llmens/rng.hpp"

using namespace llmens;

TEST_CASE("corridor reset is a fixed start state independent of seed") {
  auto env = make_environment("two-zone-corridor");
  const StateObs a = env->reset(0);
  CHECK(a.state_id == 0);
  CHECK(a.step_index == 0);
  CHECK_FALSE(a.done);
  const StateObs b = env->reset(7);
  CHECK(b.state_id == 0);
}

TEST_CASE("corridor zone rules") {
  auto env = make_environment("two-zone-corridor");
  env->reset(0);
  for (int i = 0; i < 3; ++i) env->step(0);
  // state 3, FORWARD -> +1
  StepResult r = env->step(0);
  CHECK(r.next_state.state_id == 4);
  CHECK(r.reward == 1.0);
  CHECK_FALSE(r.done);

  env->reset(0);
  for (int i = 0; i < 8; ++i) env->step(0);
  // state 8, FORWARD -> 0 (zone B wants JUMP)
  r = env->step(0);
  CHECK(r.next_state.state_id == 9);
  CHECK(r.reward == 0.0);

  env->reset(0);
  for (int i = 0; i < 10; ++i) env->step(1);
  // state 10, JUMP -> terminal with +1
  r = env->step(1);
  CHECK(r.next_state.state_id == 11);
  CHECK(r.reward == 1.0);
  CHECK(r.done);
  CHECK_THROWS_AS(env->step(0), std::logic_error);
}

TEST_CASE("corridor rejects out-of-range actions") {
  auto env = make_environment("two-zone-corridor");
  env->reset(0);
  CHECK_THROWS_AS(env->step(2), std::invalid_argument);
  CHECK_THROWS_AS(env->step(-1), std::invalid_argument);
}

TEST_CASE("corridor return equals the number of zone-correct actions") {
  SeededRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto env = make_environment("two-zone-corridor");
    StateObs state = env->reset(trial);
    double ret = 0.0;
    int correct = 0;
    while (!state.done) {
      const int action = rng.uniform_int(2);
      const bool zone_a = state.state_id <= 5;
      if ((zone_a && action == 0) || (!zone_a && action == 1)) ++correct;
      const StepResult r = env->step(action);
      ret += r.reward;
      state = r.next_state;
    }
    CHECK(ret == static_cast<double>(correct));
    CHECK(ret >= 0.0);
    CHECK(ret <= 11.0);
    CHECK(state.step_index == 11);
  }
}

TEST_CASE("corridor render names the zone and position") {
  auto env = make_environment("two-zone-corridor");
  env->reset(0);
  for (int i = 0; i < 3; ++i) env->step(0);
  std::string text = env->render();
  CHECK(text.find("Zone A") != std::string::npos);
  CHECK(text.find("position 3") != std::string::npos);
  for (int i = 0; i < 5; ++i) env->step(0);
  text = env->render();
  CHECK(text.find("Zone B") != std::string::npos);
}

TEST_CASE("unknown environment names are rejected") {
  CHECK_THROWS_AS(make_environment("pong"), std::invalid_argument);
  CHECK_THROWS_AS(env_spec("pong"), std::invalid_argument);
  CHECK_FALSE(is_registered_env("pong"));
  CHECK(is_registered_env("two-zone-corridor"));
  CHECK(is_registered_env("four-rooms-forage"));
}

TEST_CASE("four-rooms reset encodes the fixed start cell, layout per seed") {
  auto env = make_environment("four-rooms-forage");
  const StateObs obs = env->reset(3);
  CHECK(four_rooms_cell_of_observation(obs.state_id) == 1 * 9 + 1);
  CHECK(obs.step_index == 0);

  // 9x9 character grid with one agent glyph and exactly 4 pellets.
  const std::string grid = env->render();
  int agents = 0, pellets = 0, lines = 0;
  for (char c : grid) {
    if (c == 'A') ++agents;
    if (c == 'o') ++pellets;
    if (c == '\n') ++lines;
  }
  CHECK(lines == 9);
  CHECK(grid.size() == 9 * 10);
  CHECK(agents == 1);
  CHECK(pellets == 4);

  // Different seeds produce different pellet layouts (checked over a few).
  const std::string grid3 = grid;
  env->reset(4);
  CHECK(env->render() != grid3);
}

TEST_CASE("four-rooms room structure") {
  CHECK(four_rooms_room_of_cell(1 * 9 + 1) == 1);
  CHECK(four_rooms_room_of_cell(7 * 9 + 7) == 4);
  CHECK(four_rooms_room_of_cell(1 * 9 + 7) == 2);
  CHECK(four_rooms_room_of_cell(7 * 9 + 1) == 3);
  // Doorways belong to the high-coordinate side.
  CHECK(four_rooms_room_of_cell(4 * 9 + 2) == 3);
  CHECK(four_rooms_room_of_cell(2 * 9 + 4) == 2);
  CHECK(four_rooms_room_of_cell(4 * 9 + 6) == 4);
  CHECK(four_rooms_room_of_cell(6 * 9 + 4) == 4);
  // Wall cells are not in any room.
  CHECK_THROWS_AS(four_rooms_room_of_cell(4 * 9 + 4), std::invalid_argument);
  CHECK_THROWS_AS(four_rooms_room_of_cell(4 * 9 + 0), std::invalid_argument);
}

TEST_CASE("four-rooms episodes run exactly 100 steps") {
  auto env = make_environment("four-rooms-forage");
  StateObs state = env->reset(1);
  SeededRng rng(2);
  int steps = 0;
  while (!state.done) {
    state = env->step(rng.uniform_int(4)).next_state;
    ++steps;
  }
  CHECK(steps == 100);
  CHECK(state.step_index == 100);
  CHECK_THROWS_AS(env->step(0), std::logic_error);
}

TEST_CASE("rewards stay within {-1, 0, +1} in both environments") {
  for (const std::string& name : registered_env_names()) {
    auto env = make_environment(name);
    SeededRng rng(11);
    for (int episode = 0; episode < 5; ++episode) {
      StateObs state = env->reset(episode);
      while (!state.done) {
        const StepResult r = env->step(rng.uniform_int(env->spec().action_count));
        CHECK(r.reward >= -1.0);
        CHECK(r.reward <= 1.0);
        state = r.next_state;
      }
    }
  }
}

TEST_CASE("identical seed and action sequence reproduce traces and renders") {
  for (const std::string& name : registered_env_names()) {
    auto env1 = make_environment(name);
    auto env2 = make_environment(name);
    StateObs s1 = env1->reset(42);
    StateObs s2 = env2->reset(42);
    SeededRng actions(7);
    while (!s1.done) {
      CHECK(env1->render() == env2->render());
      const int a = actions.uniform_int(env1->spec().action_count);
      const StepResult r1 = env1->step(a);
      const StepResult r2 = env2->step(a);
      CHECK(r1.next_state.state_id == r2.next_state.state_id);
      CHECK(r1.reward == r2.reward);
      s1 = r1.next_state;
      s2 = r2.next_state;
    }
  }
}

TEST_CASE("world streams do not depend on agent actions") {
  // Two different action sequences under one seed must see the same
  // pellet layout (the agent differs, the world does not).
  auto env1 = make_environment("four-rooms-forage");
  auto env2 = make_environment("four-rooms-forage");
  env1->reset(9);
  env2->reset(9);
  env1->step(0);  // UP (blocked by nothing specific)
  env2->step(3);  // RIGHT
  auto pellet_cells = [](const std::string& grid) {
    std::set<int> cells;
    int cell = 0;
    for (char c : grid) {
      if (c == '\n') continue;
      if (c == 'o') cells.insert(cell);
      ++cell;
    }
    return cells;
  };
  CHECK(pellet_cells(env1->render()) == pellet_cells(env2->render()));
}

TEST_CASE("dp oracle matches the corridor closed form") {
  CHECK(dp_optimal_return("two-zone-corridor", 1.0) == doctest::Approx(11.0));
  CHECK(dp_optimal_return("two-zone-corridor", 0.0) == doctest::Approx(1.0));
  // gamma discounting: optimal policy earns +1 every step for 11 steps.
  double expected = 0.0;
  for (int t = 0; t < 11; ++t) expected += std::pow(0.9, t);
  CHECK(dp_optimal_return("two-zone-corridor", 0.9) == doctest::Approx(expected));
}

TEST_CASE("dp oracle on four-rooms requires the hazard disabled") {
  CHECK_THROWS_AS(dp_optimal_return("four-rooms-forage", 1.0, 3),
                  std::invalid_argument);
  // Pinned from one verified oracle run (seed 3 layout).
  const double v =
      dp_optimal_return("four-rooms-forage", 1.0, 3, {.disable_hazard = true});
  CHECK(v == doctest::Approx(24.0));
  CHECK_THROWS_AS(dp_optimal_return("pong", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dp_optimal_return("two-zone-corridor", 1.5),
                  std::invalid_argument);
}

TEST_CASE("episode trace line format round trips") {
  EpisodeTrace trace;
  trace.steps = {{{0, 0, false}, 0, 1.0}, {{1, 1, false}, 1, 0.0},
                 {{2, 2, false}, 0, 1.0}};
  trace.total_return = 2.0;
  const std::string lines = trace.to_lines();
  const EpisodeTrace parsed = EpisodeTrace::from_lines(lines);
  REQUIRE(parsed.steps.size() == 3);
  CHECK(parsed.total_return == 2.0);
  CHECK(parsed.steps[1].state.state_id == 1);
  CHECK(parsed.steps[1].action == 1);
  CHECK(EpisodeTrace::from_lines(parsed.to_lines()).to_lines() == lines);
  CHECK_THROWS_AS(EpisodeTrace::from_lines("1,2\n"), std::runtime_error);
}

TEST_CASE("observation state counts") {
  CHECK(observation_state_count("two-zone-corridor") == 12);
  CHECK(observation_state_count("four-rooms-forage") == 81 * 18);
}
