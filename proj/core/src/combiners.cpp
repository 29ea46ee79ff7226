#include "llmens/combiners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace llmens {

void CombinerInput::validate() const {
  if (q_rows.empty()) throw std::invalid_argument("combiner needs >= 1 agent");
  if (q_rows.size() != probabilities.size())
    throw std::invalid_argument("q_rows and probabilities disagree on agent count");
  if (action_count < 1) throw std::invalid_argument("action_count must be >= 1");
  for (const auto& row : q_rows) {
    if (static_cast<int>(row.size()) != action_count)
      throw std::invalid_argument("Q row length mismatch");
    for (double v : row)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite Q value");
  }
  for (const auto& p : probabilities) {
    if (static_cast<int>(p.size()) != action_count)
      throw std::invalid_argument("probability vector length mismatch");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw std::invalid_argument("negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("probability vector does not sum to 1");
  }
}

CombinerInput CombinerInput::from_agents(
    const std::vector<const TrainedAgent*>& agents, const StateObs& state,
    double tau) {
  if (agents.empty()) throw std::invalid_argument("combiner needs >= 1 agent");
  CombinerInput input;
  input.action_count = agents.front()->action_count;
  for (const TrainedAgent* agent : agents) {
    input.q_rows.push_back(agent->q_row(state.state_id));
    input.probabilities.push_back(
        boltzmann_probabilities(input.q_rows.back(), tau));
  }
  return input;
}

CombinerOutput majority_vote(const CombinerInput& input, SeededRng& rng) {
  input.validate();
  std::vector<int> votes(input.action_count, 0);
  for (const auto& row : input.q_rows) {
    votes[rng.pick(argmax_set(row))] += 1;
  }
  const int top = *std::max_element(votes.begin(), votes.end());
  std::vector<int> winners;
  for (int a = 0; a < input.action_count; ++a)
    if (votes[a] == top) winners.push_back(a);
  return CombinerOutput{rng.pick(winners), std::nullopt};
}

namespace {

// Borda scores for one row: position j (0 = best of n) is worth n-1-j,
// and a run of equal values shares the mean score of its positions.
std::vector<double> borda_scores(const std::vector<double>& row) {
  const int n = static_cast<int>(row.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return row[a] > row[b]; });
  std::vector<double> scores(n, 0.0);
  int j = 0;
  while (j < n) {
    int k = j;
    while (k < n && row[order[k]] == row[order[j]]) ++k;
    double mean = 0.0;
    for (int p = j; p < k; ++p) mean += n - 1 - p;
    mean /= k - j;
    for (int p = j; p < k; ++p) scores[order[p]] = mean;
    j = k;
  }
  return scores;
}

std::vector<double> elementwise_sum(const std::vector<std::vector<double>>& rows,
                                    int n) {
  std::vector<double> sum(n, 0.0);
  for (const auto& row : rows)
    for (int a = 0; a < n; ++a) sum[a] += row[a];
  return sum;
}

}  // namespace

CombinerOutput rank_vote(const CombinerInput& input, SeededRng& rng) {
  input.validate();
  std::vector<double> totals(input.action_count, 0.0);
  for (const auto& row : input.q_rows) {
    const std::vector<double> scores = borda_scores(row);
    for (int a = 0; a < input.action_count; ++a) totals[a] += scores[a];
  }
  return CombinerOutput{rng.pick(argmax_set(totals)), std::nullopt};
}

CombinerOutput aggregate(const CombinerInput& input, SeededRng& rng) {
  input.validate();
  std::vector<double> sum =
      elementwise_sum(input.probabilities, input.action_count);
  const int chosen = rng.pick(argmax_set(sum));
  for (double& v : sum) v /= static_cast<double>(input.probabilities.size());
  return CombinerOutput{chosen, std::move(sum)};
}

CombinerOutput boltzmann_addition(const CombinerInput& input, SeededRng& rng,
                                  SelectionMode mode) {
  input.validate();
  std::vector<double> fused =
      elementwise_sum(input.probabilities, input.action_count);
  const double total = std::accumulate(fused.begin(), fused.end(), 0.0);
  for (double& v : fused) v /= total;
  const int chosen = mode == SelectionMode::kSample
                         ? rng.sample(fused)
                         : rng.pick(argmax_set(fused));
  return CombinerOutput{chosen, std::move(fused)};
}

CombinerOutput boltzmann_multiplication(const CombinerInput& input,
                                        SeededRng& rng) {
  input.validate();
  std::vector<double> fused(input.action_count, 1.0);
  for (const auto& p : input.probabilities)
    for (int a = 0; a < input.action_count; ++a) fused[a] *= p[a];
  const double total = std::accumulate(fused.begin(), fused.end(), 0.0);
  if (!(total > 0.0))
    throw std::domain_error("all-zero product distribution");
  for (double& v : fused) v /= total;
  return CombinerOutput{rng.sample(fused), std::move(fused)};
}

namespace {
CombinerOutput boltzmann_addition_default(const CombinerInput& input,
                                          SeededRng& rng) {
  return boltzmann_addition(input, rng);
}
}  // namespace

CombinerFn combiner_by_name(const std::string& name) {
  if (name == "majority") return &majority_vote;
  if (name == "rank") return &rank_vote;
  if (name == "aggregate") return &aggregate;
  if (name == "boltzmann-add") return &boltzmann_addition_default;
  if (name == "boltzmann-mul") return &boltzmann_multiplication;
  throw std::invalid_argument("unknown combiner: " + name);
}

const std::vector<std::string>& combiner_names() {
  static const std::vector<std::string> names = {
      "majority", "rank", "aggregate", "boltzmann-add", "boltzmann-mul"};
  return names;
}

}  // namespace llmens
