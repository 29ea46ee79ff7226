#ifndef LLMENS_ENV_HPP
#define LLMENS_ENV_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace llmens {

// Static description of an environment, including the text fragments that
// fill the task-description prompt template.
struct EnvSpec {
  std::string name;
  int action_count = 0;
  std::vector<std::string> action_names;
  std::string task_details;
  std::string action_details;
  std::string reward_details;
  std::string end_conditions;
  std::string goal_details;
  int max_steps = 1;
  int oracle_situation_count = 2;
};

struct StateObs {
  int state_id = 0;
  int step_index = 0;
  bool done = false;
};

struct StepResult {
  StateObs next_state;
  double reward = 0.0;
  bool done = false;
};

struct TraceStep {
  StateObs state;  // state the action was taken in
  int action = 0;
  double reward = 0.0;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  double total_return = 0.0;

  // One step per line: "state_id,action,reward".
  std::string to_lines() const;
  static EpisodeTrace from_lines(const std::string& text);
};

// A stateful instance of a registered environment. Instances are
// independent; many can run in parallel.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;

  // Starts a new episode. The world RNG streams derive from `seed` only;
  // the start state itself is fixed per environment.
  virtual StateObs reset(std::uint64_t seed) = 0;

  // Advances the current state. Throws if the episode is done or the
  // action is out of range.
  virtual StepResult step(int action) = 0;

  virtual StateObs current() const = 0;

  // Deterministic text rendering of the current state.
  virtual std::string render() const = 0;
};

struct EnvOverrides {
  bool disable_hazard = false;  // four-rooms-forage only
};

// Registry. Known names: "two-zone-corridor", "four-rooms-forage".
// Throws std::invalid_argument for unknown names.
std::unique_ptr<Environment> make_environment(const std::string& name,
                                              const EnvOverrides& overrides = {});
const EnvSpec& env_spec(const std::string& name);
bool is_registered_env(const std::string& name);
std::vector<std::string> registered_env_names();

// Exact optimal return from the start state by finite-horizon dynamic
// programming. Supports two-zone-corridor always and four-rooms-forage
// with the hazard disabled; throws otherwise. `seed` fixes the layout
// for seeded environments.
double dp_optimal_return(const std::string& name, double gamma,
                         std::uint64_t seed = 0,
                         const EnvOverrides& overrides = {});

// Number of distinct observation state ids (12 for the corridor; grid
// cell x pellet direction x hazard proximity for four-rooms).
int observation_state_count(const std::string& name);

// Room index 1..4 of a four-rooms grid cell (row-major cell id). Doorway
// cells belong to the room on their high-coordinate side.
int four_rooms_room_of_cell(int cell);

// The agent cell encoded in a four-rooms observation id.
int four_rooms_cell_of_observation(int state_id);

}  // namespace llmens

#endif
