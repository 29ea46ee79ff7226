#include "llmens/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace llmens {

using json = nlohmann::ordered_json;

namespace {
constexpr int kAgentFormatVersion = 1;
}

void AgentConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw std::invalid_argument("learning_rate must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_start &&
        epsilon_start <= 1.0))
    throw std::invalid_argument("epsilon schedule must satisfy 0 <= min <= start <= 1");
  if (!(epsilon_decay_per_step > 0.0 && epsilon_decay_per_step <= 1.0))
    throw std::invalid_argument("epsilon_decay_per_step must lie in (0, 1]");
  if (training_episodes < 0)
    throw std::invalid_argument("training_episodes must be non-negative");
}

std::vector<double> TrainedAgent::q_row(int state_id) const {
  auto it = q_table.find(state_id);
  if (it != q_table.end()) return it->second;
  return std::vector<double>(action_count, 0.0);
}

TrainedAgent train_q_learning(const std::string& env_name,
                              const AgentConfig& config, std::uint64_t seed,
                              const std::string& agent_id) {
  config.validate();
  auto env = make_environment(env_name);
  const int n_actions = env->spec().action_count;

  TrainedAgent agent;
  agent.agent_id = agent_id.empty() ? "q-seed" + std::to_string(seed) : agent_id;
  agent.env_name = env_name;
  agent.action_count = n_actions;
  agent.config = config;
  agent.train_seed = seed;

  SeededRng explore_rng(stream_seed(seed, "explore"));
  double epsilon = config.epsilon_start;

  auto row = [&](int state) -> std::vector<double>& {
    auto it = agent.q_table.find(state);
    if (it == agent.q_table.end())
      it = agent.q_table.emplace(state, std::vector<double>(n_actions, 0.0)).first;
    return it->second;
  };

  for (int episode = 0; episode < config.training_episodes; ++episode) {
    StateObs state = env->reset(stream_seed(seed, "episode", episode));
    while (!state.done) {
      int action;
      if (explore_rng.uniform01() < epsilon) {
        action = explore_rng.uniform_int(n_actions);
      } else {
        const std::vector<int> best = argmax_set(row(state.state_id));
        action = explore_rng.pick(best);
      }
      epsilon = std::max(config.epsilon_min,
                         epsilon * config.epsilon_decay_per_step);

      const StepResult result = env->step(action);
      double bootstrap = 0.0;
      if (!result.done) {
        const std::vector<double>& next_row = row(result.next_state.state_id);
        bootstrap = *std::max_element(next_row.begin(), next_row.end());
      }
      double& q = row(state.state_id)[action];
      q += config.learning_rate *
           (result.reward + config.gamma * bootstrap - q);
      state = result.next_state;
    }
  }
  return agent;
}

int act_greedy(const TrainedAgent& agent, const StateObs& state, SeededRng& rng) {
  const std::vector<double> row = agent.q_row(state.state_id);
  return rng.pick(argmax_set(row));
}

std::vector<double> boltzmann_probabilities(const std::vector<double>& q_row,
                                            double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (q_row.empty()) throw std::invalid_argument("empty Q row");
  const double max = *std::max_element(q_row.begin(), q_row.end());
  std::vector<double> probs(q_row.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < q_row.size(); ++i) {
    probs[i] = std::exp((q_row[i] - max) / tau);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

std::vector<double> action_probabilities(const TrainedAgent& agent,
                                         const StateObs& state, double tau) {
  return boltzmann_probabilities(agent.q_row(state.state_id), tau);
}

std::string save_agent(const TrainedAgent& agent) {
  json record;
  record["format_version"] = kAgentFormatVersion;
  record["agent_id"] = agent.agent_id;
  record["env_name"] = agent.env_name;
  record["action_count"] = agent.action_count;
  record["train_seed"] = agent.train_seed;
  record["config"] = {
      {"learning_rate", agent.config.learning_rate},
      {"gamma", agent.config.gamma},
      {"epsilon_start", agent.config.epsilon_start},
      {"epsilon_min", agent.config.epsilon_min},
      {"epsilon_decay_per_step", agent.config.epsilon_decay_per_step},
      {"training_episodes", agent.config.training_episodes},
  };
  json entries = json::array();
  for (const auto& [state, row] : agent.q_table) {
    for (int action = 0; action < static_cast<int>(row.size()); ++action) {
      entries.push_back(json::array({state, action, row[action]}));
    }
  }
  record["q_table"] = std::move(entries);
  return record.dump(2) + "\n";
}

void save_agent_file(const TrainedAgent& agent,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << save_agent(agent);
}

AgentLoadResult load_agent(const std::string& record) {
  json doc;
  try {
    doc = json::parse(record);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed agent record: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kAgentFormatVersion)
      throw std::runtime_error("unsupported agent format version");
    AgentLoadResult result;
    TrainedAgent& agent = result.agent;
    agent.agent_id = doc.at("agent_id").get<std::string>();
    agent.env_name = doc.at("env_name").get<std::string>();
    agent.action_count = doc.at("action_count").get<int>();
    agent.train_seed = doc.at("train_seed").get<std::uint64_t>();
    const json& cfg = doc.at("config");
    agent.config.learning_rate = cfg.at("learning_rate").get<double>();
    agent.config.gamma = cfg.at("gamma").get<double>();
    agent.config.epsilon_start = cfg.at("epsilon_start").get<double>();
    agent.config.epsilon_min = cfg.at("epsilon_min").get<double>();
    agent.config.epsilon_decay_per_step =
        cfg.at("epsilon_decay_per_step").get<double>();
    agent.config.training_episodes = cfg.at("training_episodes").get<int>();
    for (const json& entry : doc.at("q_table")) {
      const int state = entry.at(0).get<int>();
      const int action = entry.at(1).get<int>();
      const double value = entry.at(2).get<double>();
      if (action < 0 || action >= agent.action_count)
        throw std::runtime_error("q_table action out of range");
      auto it = agent.q_table.find(state);
      if (it == agent.q_table.end())
        it = agent.q_table
                 .emplace(state, std::vector<double>(agent.action_count, 0.0))
                 .first;
      it->second[action] = value;
    }
    result.env_recognized = is_registered_env(agent.env_name);
    return result;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed agent record: ") + e.what());
  }
}

AgentLoadResult load_agent_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_agent(buffer.str());
}

TrainedAgent make_fixed_action_agent(const std::string& env_name, int action,
                                     const std::string& agent_id) {
  const EnvSpec& spec = env_spec(env_name);
  if (action < 0 || action >= spec.action_count)
    throw std::invalid_argument("action out of range");
  TrainedAgent agent;
  agent.agent_id = agent_id;
  agent.env_name = env_name;
  agent.action_count = spec.action_count;
  const int states = observation_state_count(env_name);
  for (int state = 0; state < states; ++state) {
    std::vector<double> row(spec.action_count, 0.0);
    row[action] = 1.0;
    agent.q_table.emplace(state, std::move(row));
  }
  return agent;
}

}  // namespace llmens
