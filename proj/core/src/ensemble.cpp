#include "llmens/ensemble.hpp"

#include <stdexcept>

#include <json.hpp>

#include "llmens/situations.hpp"

namespace llmens {

using json = nlohmann::ordered_json;

std::string RunResult::to_json() const {
  json doc;
  doc["episode_return"] = episode_return;
  json steps = json::array();
  for (const TraceStep& s : trace.steps)
    steps.push_back(json::array({s.state.state_id, s.action, s.reward}));
  doc["steps"] = std::move(steps);
  json situations = json::array();
  for (const auto& [step, situation] : situation_timeline)
    situations.push_back(json::array({step, situation}));
  doc["situation_timeline"] = std::move(situations);
  json selections = json::array();
  for (const auto& [step, agent] : selection_timeline)
    selections.push_back(json::array({step, agent}));
  doc["selection_timeline"] = std::move(selections);
  doc["categorizer_call_count"] = categorizer_call_count;
  return doc.dump(2) + "\n";
}

RunResult RunResult::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed run record: ") + e.what());
  }
  try {
    RunResult result;
    result.episode_return = doc.at("episode_return").get<double>();
    int step_index = 0;
    for (const json& s : doc.at("steps")) {
      TraceStep step;
      step.state.state_id = s.at(0).get<int>();
      step.state.step_index = step_index++;
      step.action = s.at(1).get<int>();
      step.reward = s.at(2).get<double>();
      result.trace.steps.push_back(step);
      result.trace.total_return += step.reward;
    }
    for (const json& s : doc.at("situation_timeline"))
      result.situation_timeline.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
    for (const json& s : doc.at("selection_timeline"))
      result.selection_timeline.emplace_back(s.at(0).get<int>(),
                                             s.at(1).get<std::string>());
    result.categorizer_call_count = doc.at("categorizer_call_count").get<int>();
    return result;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed run record: ") + e.what());
  }
}

namespace {

void check_agents(const std::vector<const TrainedAgent*>& agents,
                  const Environment& env) {
  if (agents.empty()) throw std::invalid_argument("ensemble needs >= 1 agent");
  for (const TrainedAgent* agent : agents) {
    if (agent == nullptr) throw std::invalid_argument("null agent");
    if (agent->env_name != env.spec().name)
      throw std::invalid_argument("agent " + agent->agent_id +
                                  " was trained on " + agent->env_name +
                                  ", not " + env.spec().name);
  }
}

// Common greedy rollout: `select` returns the agent controlling the
// current step. Both the single-agent path and the situation-switched
// path run through here so their RNG consumption is identical.
RunResult rollout_greedy(
    const std::vector<const TrainedAgent*>& agents, Environment& env,
    std::uint64_t seed,
    const std::function<const TrainedAgent*(const StateObs&)>& select) {
  RunResult result;
  SeededRng tie_rng(stream_seed(seed, "act"));
  StateObs state = env.reset(seed);
  while (!state.done) {
    const TrainedAgent* agent = select(state);
    const int action = act_greedy(*agent, state, tie_rng);
    const StepResult step = env.step(action);
    result.trace.steps.push_back(TraceStep{state, action, step.reward});
    result.trace.total_return += step.reward;
    state = step.next_state;
  }
  result.episode_return = result.trace.total_return;
  return result;
}

}  // namespace

RunResult run_llm_ens_episode(const std::vector<const TrainedAgent*>& agents,
                              const RewardDistribution& dist,
                              StateCategorizer& categorizer, Environment& env,
                              const EnsembleConfig& config) {
  check_agents(agents, env);
  if (config.cadence_k < 1) throw std::invalid_argument("cadence must be >= 1");

  std::vector<std::string> agent_ids;
  for (const TrainedAgent* agent : agents) agent_ids.push_back(agent->agent_id);

  RunResult result;
  const TrainedAgent* selected = nullptr;
  int situation = 0;
  const int calls_before = categorizer.call_count();

  auto select = [&](const StateObs& state) -> const TrainedAgent* {
    if (should_categorize(state.step_index, config.cadence_k)) {
      try {
        situation = categorizer.categorize(env, state);
      } catch (const std::exception&) {
        if (!config.hold_previous_on_error || selected == nullptr) throw;
        // Keep the previous situation and agent; the failed call still
        // counted against the categorizer.
        result.situation_timeline.emplace_back(state.step_index, situation);
        result.selection_timeline.emplace_back(state.step_index,
                                               selected->agent_id);
        return selected;
      }
      const std::string best = best_agent_for(dist, situation, agent_ids);
      for (const TrainedAgent* agent : agents)
        if (agent->agent_id == best) selected = agent;
      result.situation_timeline.emplace_back(state.step_index, situation);
      result.selection_timeline.emplace_back(state.step_index, selected->agent_id);
    }
    return selected;
  };

  RunResult rolled = rollout_greedy(agents, env, config.rng_seed, select);
  result.episode_return = rolled.episode_return;
  result.trace = std::move(rolled.trace);
  result.categorizer_call_count = categorizer.call_count() - calls_before;
  return result;
}

RunResult run_single_agent_episode(const TrainedAgent& agent, Environment& env,
                                   std::uint64_t seed) {
  check_agents({&agent}, env);
  return rollout_greedy({&agent}, env, seed,
                        [&](const StateObs&) { return &agent; });
}

RunResult run_combiner_episode(const std::vector<const TrainedAgent*>& agents,
                               const std::string& combiner_name, Environment& env,
                               std::uint64_t seed, double tau) {
  check_agents(agents, env);
  const CombinerFn combiner = combiner_by_name(combiner_name);

  RunResult result;
  SeededRng rng(stream_seed(seed, "act"));
  StateObs state = env.reset(seed);
  while (!state.done) {
    const CombinerInput input = CombinerInput::from_agents(agents, state, tau);
    const int action = combiner(input, rng).chosen_action;
    const StepResult step = env.step(action);
    result.trace.steps.push_back(TraceStep{state, action, step.reward});
    result.trace.total_return += step.reward;
    state = step.next_state;
  }
  result.episode_return = result.trace.total_return;
  return result;
}

std::vector<double> evaluate(const std::function<RunResult(std::uint64_t)>& run_fn,
                             int episodes, std::uint64_t seed_base) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  std::vector<double> returns;
  returns.reserve(episodes);
  for (int i = 0; i < episodes; ++i)
    returns.push_back(run_fn(seed_base + static_cast<std::uint64_t>(i)).episode_return);
  return returns;
}

}  // namespace llmens
