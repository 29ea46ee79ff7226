#ifndef LLMENS_AGENT_HPP
#define LLMENS_AGENT_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "llmens/env.hpp"
#include "llmens/rng.hpp"

namespace llmens {

struct AgentConfig {
  double learning_rate = 0.1;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_min = 0.1;
  double epsilon_decay_per_step = 0.99999;
  int training_episodes = 5000;

  void validate() const;  // throws std::invalid_argument
};

// Immutable after training; safe to share across threads read-only.
// Unvisited states implicitly hold an all-zero row.
struct TrainedAgent {
  std::string agent_id;
  std::string env_name;
  int action_count = 0;
  std::map<int, std::vector<double>> q_table;  // state_id -> row
  AgentConfig config;
  std::uint64_t train_seed = 0;

  // Zero row for unvisited states.
  std::vector<double> q_row(int state_id) const;
};

// One-step Q-learning with per-step multiplicative epsilon decay.
// Deterministic given (spec, config, seed).
TrainedAgent train_q_learning(const std::string& env_name,
                              const AgentConfig& config, std::uint64_t seed,
                              const std::string& agent_id = "");

// Argmax over the agent's row; exact ties broken uniformly via `rng`.
int act_greedy(const TrainedAgent& agent, const StateObs& state, SeededRng& rng);

// Max-shifted Boltzmann distribution over a Q row. Throws for tau <= 0.
std::vector<double> boltzmann_probabilities(const std::vector<double>& q_row,
                                            double tau);
std::vector<double> action_probabilities(const TrainedAgent& agent,
                                         const StateObs& state, double tau);

// JSON agent records with an explicit format version; q_table stored as
// sparse (state, action, value) triples.
std::string save_agent(const TrainedAgent& agent);
void save_agent_file(const TrainedAgent& agent, const std::filesystem::path& path);

struct AgentLoadResult {
  TrainedAgent agent;
  bool env_recognized = true;  // false when env_name is not registered
};
AgentLoadResult load_agent(const std::string& record);
AgentLoadResult load_agent_file(const std::filesystem::path& path);

// Hand-built single-action agent: prefers `action` in every state of the
// environment. Useful as a deliberately weak ensemble member.
TrainedAgent make_fixed_action_agent(const std::string& env_name, int action,
                                     const std::string& agent_id);

}  // namespace llmens

#endif
