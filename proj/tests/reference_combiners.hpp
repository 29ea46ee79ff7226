// Test-only reference implementations of the five combiners, written as
// naive straight-line code so the production implementations have an
// independent oracle to match. Softmax here deliberately skips the
// max-shift the production code uses.
#ifndef LLMENS_TESTS_REFERENCE_COMBINERS_HPP
#define LLMENS_TESTS_REFERENCE_COMBINERS_HPP

#include <cmath>
#include <vector>

#include "llmens/rng.hpp"

namespace ref {

inline std::vector<double> softmax(const std::vector<double>& q, double tau) {
  std::vector<double> p(q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp(q[i] / tau);
    sum += p[i];
  }
  for (std::size_t i = 0; i < q.size(); ++i) p[i] /= sum;
  return p;
}

inline int greedy(const std::vector<double>& q, llmens::SeededRng& rng) {
  double best = q[0];
  for (double v : q) best = v > best ? v : best;
  std::vector<int> tied;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] == best) tied.push_back(static_cast<int>(i));
  if (tied.size() == 1) return tied[0];
  return tied[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(tied.size())))];
}

inline int pick_max(const std::vector<double>& values, llmens::SeededRng& rng) {
  double best = values[0];
  for (double v : values) best = v > best ? v : best;
  std::vector<int> tied;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == best) tied.push_back(static_cast<int>(i));
  if (tied.size() == 1) return tied[0];
  return tied[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(tied.size())))];
}

inline int majority(const std::vector<std::vector<double>>& q_rows, int actions,
                    llmens::SeededRng& rng) {
  std::vector<double> votes(static_cast<std::size_t>(actions), 0.0);
  for (const auto& row : q_rows) votes[static_cast<std::size_t>(greedy(row, rng))] += 1.0;
  return pick_max(votes, rng);
}

// Borda totals: position j from the top of an agent's descending-Q order
// scores actions-1-j; equal Q values share the mean of their positions.
inline std::vector<double> borda_totals(const std::vector<std::vector<double>>& q_rows,
                                        int actions) {
  std::vector<double> totals(static_cast<std::size_t>(actions), 0.0);
  for (const auto& row : q_rows) {
    for (int a = 0; a < actions; ++a) {
      int strictly_better = 0;
      int equal = 0;
      for (int b = 0; b < actions; ++b) {
        if (row[b] > row[a]) ++strictly_better;
        if (row[b] == row[a]) ++equal;  // includes a itself
      }
      // Positions occupied by a's tie group: strictly_better .. +equal-1.
      double score = 0.0;
      for (int p = strictly_better; p < strictly_better + equal; ++p)
        score += actions - 1 - p;
      totals[static_cast<std::size_t>(a)] += score / equal;
    }
  }
  return totals;
}

inline std::vector<double> aggregate_fused(const std::vector<std::vector<double>>& probs,
                                           int actions) {
  std::vector<double> fused(static_cast<std::size_t>(actions), 0.0);
  for (const auto& p : probs)
    for (int a = 0; a < actions; ++a) fused[static_cast<std::size_t>(a)] += p[a];
  for (double& v : fused) v /= static_cast<double>(probs.size());
  return fused;
}

inline std::vector<double> addition_fused(const std::vector<std::vector<double>>& probs,
                                          int actions) {
  std::vector<double> fused(static_cast<std::size_t>(actions), 0.0);
  for (const auto& p : probs)
    for (int a = 0; a < actions; ++a) fused[static_cast<std::size_t>(a)] += p[a];
  double total = 0.0;
  for (double v : fused) total += v;
  for (double& v : fused) v /= total;
  return fused;
}

inline std::vector<double> multiplication_fused(
    const std::vector<std::vector<double>>& probs, int actions) {
  std::vector<double> fused(static_cast<std::size_t>(actions), 1.0);
  for (const auto& p : probs)
    for (int a = 0; a < actions; ++a) fused[static_cast<std::size_t>(a)] *= p[a];
  double total = 0.0;
  for (double v : fused) total += v;
  for (double& v : fused) v /= total;
  return fused;
}

inline int sample(const std::vector<double>& p, llmens::SeededRng& rng) {
  const double u = rng.uniform01();
  double c = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    c += p[i];
    if (u < c) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace ref

#endif
