#include "llmens/reward_profile.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace llmens {

using json = nlohmann::ordered_json;

namespace {
constexpr int kProfileFormatVersion = 1;
}

void RewardDistribution::update(const SegmentRecord& record) {
  Cell& cell = cells_[{record.agent_id, record.situation_id}];
  cell.reward_sum += record.accumulated_reward;
  cell.count += 1;
}

std::optional<double> RewardDistribution::average(const std::string& agent_id,
                                                  int situation_id) const {
  auto it = cells_.find({agent_id, situation_id});
  if (it == cells_.end()) return std::nullopt;
  return it->second.reward_sum / static_cast<double>(it->second.count);
}

std::optional<RewardDistribution::Cell> RewardDistribution::cell(
    const std::string& agent_id, int situation_id) const {
  auto it = cells_.find({agent_id, situation_id});
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> RewardDistribution::pooled_average(
    const std::string& agent_id) const {
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& [key, cell] : cells_) {
    if (key.first != agent_id) continue;
    sum += cell.reward_sum;
    count += cell.count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

RewardDistribution RewardDistribution::merge(const RewardDistribution& a,
                                             const RewardDistribution& b) {
  RewardDistribution out = a;
  for (const auto& [key, cell] : b.cells_) {
    Cell& target = out.cells_[key];
    target.reward_sum += cell.reward_sum;
    target.count += cell.count;
  }
  return out;
}

std::string RewardDistribution::to_json(const std::string& catalog_hash) const {
  json doc;
  doc["format_version"] = kProfileFormatVersion;
  doc["catalog_hash"] = catalog_hash;
  json rows = json::array();
  for (const auto& [key, cell] : cells_) {
    rows.push_back({{"agent_id", key.first},
                    {"situation_id", key.second},
                    {"reward_sum", cell.reward_sum},
                    {"count", cell.count}});
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

RewardDistribution RewardDistribution::from_json(const std::string& text,
                                                 std::string* catalog_hash_out) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed profile: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kProfileFormatVersion)
      throw std::runtime_error("unsupported profile format version");
    if (catalog_hash_out)
      *catalog_hash_out = doc.at("catalog_hash").get<std::string>();
    RewardDistribution dist;
    for (const json& row : doc.at("rows")) {
      const Key key{row.at("agent_id").get<std::string>(),
                    row.at("situation_id").get<int>()};
      Cell cell{row.at("reward_sum").get<double>(),
                row.at("count").get<std::int64_t>()};
      if (cell.count < 1) throw std::runtime_error("profile row with count < 1");
      dist.cells_[key] = cell;
    }
    return dist;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed profile: ") + e.what());
  }
}

void RewardDistribution::save(const std::filesystem::path& path,
                              const std::string& catalog_hash) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(catalog_hash);
}

RewardDistribution RewardDistribution::load(
    const std::filesystem::path& path,
    const std::optional<std::string>& expected_catalog_hash,
    std::string* catalog_hash_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string hash;
  RewardDistribution dist = from_json(buffer.str(), &hash);
  if (expected_catalog_hash && hash != *expected_catalog_hash)
    throw std::runtime_error(
        "profile was built against a different situation catalog (hash " +
        hash + ", expected " + *expected_catalog_hash + ")");
  if (catalog_hash_out) *catalog_hash_out = hash;
  return dist;
}

std::vector<SegmentRecord> profile_agent(const TrainedAgent& agent,
                                         const std::string& env_name,
                                         StateCategorizer& categorizer,
                                         const CategorizerConfig& config,
                                         int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (config.cadence_k < 1) throw std::invalid_argument("cadence must be >= 1");
  if (agent.env_name != env_name)
    throw std::invalid_argument("agent " + agent.agent_id +
                                " was trained on " + agent.env_name);

  auto env = make_environment(env_name);
  std::vector<SegmentRecord> records;

  for (int episode = 0; episode < episodes; ++episode) {
    SeededRng tie_rng(stream_seed(seed, "profile-tie", episode));
    StateObs state = env->reset(stream_seed(seed, "profile-env", episode));

    SegmentRecord open;
    bool has_open = false;
    int segment_index = 0;
    while (!state.done) {
      if (should_categorize(state.step_index, config.cadence_k)) {
        if (has_open) records.push_back(open);
        open = SegmentRecord{agent.agent_id,
                             categorizer.categorize(*env, state),
                             segment_index++, episode, 0.0};
        has_open = true;
      }
      const int action = act_greedy(agent, state, tie_rng);
      const StepResult result = env->step(action);
      open.accumulated_reward += result.reward;
      state = result.next_state;
    }
    if (has_open) records.push_back(open);
  }
  return records;
}

std::string best_agent_for(const RewardDistribution& dist, int situation_id,
                           const std::vector<std::string>& agent_ids) {
  if (agent_ids.empty()) throw std::invalid_argument("agent_ids must be non-empty");

  std::optional<std::string> best;
  double best_value = 0.0;
  for (const std::string& id : agent_ids) {
    const std::optional<double> avg = dist.average(id, situation_id);
    if (!avg) continue;
    if (!best || *avg > best_value || (*avg == best_value && id < *best)) {
      best = id;
      best_value = *avg;
    }
  }
  if (best) return *best;

  // Situation never profiled for any agent: pooled-mean fallback.
  for (const std::string& id : agent_ids) {
    const std::optional<double> avg = dist.pooled_average(id);
    if (!avg) continue;
    if (!best || *avg > best_value || (*avg == best_value && id < *best)) {
      best = id;
      best_value = *avg;
    }
  }
  if (best) return *best;

  // No data at all: deterministic lexicographic choice.
  return *std::min_element(agent_ids.begin(), agent_ids.end());
}

}  // namespace llmens
