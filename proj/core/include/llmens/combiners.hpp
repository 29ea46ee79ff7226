#ifndef LLMENS_COMBINERS_HPP
#define LLMENS_COMBINERS_HPP

#include <optional>
#include <string>
#include <vector>

#include "llmens/agent.hpp"
#include "llmens/rng.hpp"

namespace llmens {

// Per-agent views of one decision point. `probabilities` are the agents'
// Boltzmann distributions at a shared temperature; combiners that only
// rank or vote use the raw rows.
struct CombinerInput {
  std::vector<std::vector<double>> q_rows;
  std::vector<std::vector<double>> probabilities;
  int action_count = 0;

  void validate() const;  // throws std::invalid_argument

  static CombinerInput from_agents(const std::vector<const TrainedAgent*>& agents,
                                   const StateObs& state, double tau);
};

struct CombinerOutput {
  int chosen_action = 0;
  std::optional<std::vector<double>> fused_distribution;
};

// Every tie draws from the caller's RNG; a unique winner draws nothing,
// so RNG streams stay aligned across tied and untied inputs.

// Each agent votes its greedy action; plurality wins.
CombinerOutput majority_vote(const CombinerInput& input, SeededRng& rng);

// Borda count over each agent's descending-Q ranking; tied Q values share
// the mean of their positions' scores.
CombinerOutput rank_vote(const CombinerInput& input, SeededRng& rng);

// Equal sum of the agents' probability vectors; argmax of the sum. The
// reported distribution is the sum divided by the agent count.
CombinerOutput aggregate(const CombinerInput& input, SeededRng& rng);

enum class SelectionMode { kArgmax, kSample };

// Normalized sum of Boltzmann probabilities. Selects the argmax by
// default; SelectionMode::kSample draws from the fused distribution.
CombinerOutput boltzmann_addition(const CombinerInput& input, SeededRng& rng,
                                  SelectionMode mode = SelectionMode::kArgmax);

// Normalized product of Boltzmann probabilities; the action is sampled
// from the fused distribution.
CombinerOutput boltzmann_multiplication(const CombinerInput& input,
                                        SeededRng& rng);

// Lookup by the wire names "majority", "rank", "aggregate",
// "boltzmann-add", "boltzmann-mul". Throws for unknown names.
using CombinerFn = CombinerOutput (*)(const CombinerInput&, SeededRng&);
CombinerFn combiner_by_name(const std::string& name);
const std::vector<std::string>& combiner_names();

}  // namespace llmens

#endif
