#ifndef LLMENS_REWARD_PROFILE_HPP
#define LLMENS_REWARD_PROFILE_HPP

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llmens/agent.hpp"
#include "llmens/env.hpp"
#include "llmens/situations.hpp"

namespace llmens {

// One profiled occurrence: the summed reward of one K-step segment of one
// rollout, labeled with the situation seen at the segment's opening step.
struct SegmentRecord {
  std::string agent_id;
  int situation_id = 0;
  int segment_index = 0;   // within its episode
  int episode_index = 0;
  double accumulated_reward = 0.0;
};

// Running per-(agent, situation) reward statistics. Unobserved pairs are
// absent, never zero.
class RewardDistribution {
 public:
  struct Cell {
    double reward_sum = 0.0;
    std::int64_t count = 0;
    bool operator==(const Cell&) const = default;
  };
  using Key = std::pair<std::string, int>;

  void update(const SegmentRecord& record);
  std::optional<double> average(const std::string& agent_id, int situation_id) const;
  std::optional<Cell> cell(const std::string& agent_id, int situation_id) const;

  // Mean over every segment the agent was profiled on, all situations
  // pooled; absent for agents with no data.
  std::optional<double> pooled_average(const std::string& agent_id) const;

  // Keywise sum; associative and commutative.
  static RewardDistribution merge(const RewardDistribution& a,
                                  const RewardDistribution& b);

  const std::map<Key, Cell>& cells() const { return cells_; }
  bool empty() const { return cells_.empty(); }

  // JSON persistence. The stored catalog hash makes profiles built
  // against a different catalog detectable; load rejects on mismatch
  // when `expected_catalog_hash` is given.
  std::string to_json(const std::string& catalog_hash) const;
  static RewardDistribution from_json(const std::string& text,
                                      std::string* catalog_hash_out = nullptr);
  void save(const std::filesystem::path& path, const std::string& catalog_hash) const;
  static RewardDistribution load(const std::filesystem::path& path,
                                 const std::optional<std::string>& expected_catalog_hash = std::nullopt,
                                 std::string* catalog_hash_out = nullptr);

 private:
  std::map<Key, Cell> cells_;
};

// Situation oracle/LLM adapter used by profiling and the ensemble
// runtime. Implementations may be stateful (call counting, caching).
class StateCategorizer {
 public:
  virtual ~StateCategorizer() = default;
  virtual int categorize(const Environment& env, const StateObs& state) = 0;
  virtual int call_count() const = 0;
};

// Greedy rollouts segmented at the categorization cadence: a segment
// opens at every step where should_categorize fires, labeled with the
// situation of the state observed there, and accumulates rewards until
// the next categorization point or episode end.
std::vector<SegmentRecord> profile_agent(const TrainedAgent& agent,
                                         const std::string& env_name,
                                         StateCategorizer& categorizer,
                                         const CategorizerConfig& config,
                                         int episodes, std::uint64_t seed);

// Argmax of average(agent, situation) over `agent_ids`; ties go to the
// lexicographically smallest id. When no agent has data for the
// situation, falls back to the highest pooled mean (then lexicographic).
std::string best_agent_for(const RewardDistribution& dist, int situation_id,
                           const std::vector<std::string>& agent_ids);

}  // namespace llmens

#endif
