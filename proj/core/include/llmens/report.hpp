#ifndef LLMENS_REPORT_HPP
#define LLMENS_REPORT_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmens/agent.hpp"
#include "llmens/ensemble.hpp"
#include "llmens/gateway.hpp"

namespace llmens {

// --- Statistics and formatting -------------------------------------------

// Arithmetic mean and sample standard deviation (n-1 divisor; 0 when n=1).
std::pair<double, double> mean_std(std::span<const double> values);

// 100 * (candidate - baseline) / baseline; absent when baseline <= 0.
std::optional<double> improvement_pct(double candidate, double baseline);

// "10400(4159.33)": mean with trailing zeros trimmed, std fixed to two
// decimals.
std::string format_cell(double mean, double std_dev);
std::string format_number_trimmed(double value);
std::string format_improvement(const std::optional<double>& pct);  // "20.9" or "n/a"

// Best and second-best method by mean; ties resolved by method name.
// Throws for fewer than 2 methods.
std::pair<std::string, std::string> mark_best(const std::map<std::string, double>& row);

// --- Plans ----------------------------------------------------------------

struct HeatmapPlan {
  std::string param;  // "learning_rate" | "training_episodes"
  std::vector<double> values;
  std::vector<std::uint64_t> seeds = {0, 1};
};

struct ExperimentPlan {
  std::string env_name;
  std::vector<std::uint64_t> agent_seeds;
  std::vector<std::filesystem::path> agent_files;  // alternative to seeds
  std::vector<std::string> methods;
  int eval_episodes = 5;
  std::uint64_t eval_seed_base = 10000;
  int cadence_k = 30;
  std::string categorizer = "oracle";  // oracle | llm
  double temperature = 1.0;
  AgentConfig agent_config;
  int profile_episodes = 10;
  std::uint64_t profile_seed_base = 1000;
  bool retrain_per_eval = false;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> catalog_file;
  std::optional<HeatmapPlan> heatmap;
  // Gateway settings for categorizer == "llm".
  std::string endpoint_url;
  std::string model_name = "gpt-4o-mini";
  std::filesystem::path cache_dir = ".llmens-cache";

  void validate() const;
  std::string to_json() const;
  static ExperimentPlan from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static ExperimentPlan load(const std::filesystem::path& path);
};

// --- Results ----------------------------------------------------------------

struct ResultRow {
  std::string env;
  std::string method;
  double mean = 0.0;
  double std_dev = 0.0;
  int n = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;  // method order follows the plan
};

struct HeatmapGrid {
  std::string param;
  std::vector<double> axis_x;
  std::vector<double> axis_y;
  // cells[y][x]; absent = undefined baseline ("n/a").
  std::vector<std::vector<std::optional<double>>> cells;
};

struct ExperimentResult {
  ResultTable table;
  std::optional<HeatmapGrid> heatmap;
};

// Full pipeline: train or load agents, resolve the situation catalog,
// profile, evaluate every method, and write the table plus all per-run
// traces under plan.output_dir. Bit-reproducible with the oracle
// categorizer. `transport` overrides the HTTP transport (mock scripts);
// nullptr uses real HTTP when the plan needs the gateway.
ExperimentResult run_experiment(const ExperimentPlan& plan,
                                std::shared_ptr<Transport> transport = nullptr);

// Writes results.csv (machine) and results.txt (human, '*' best and '_'
// second-best per env). Envs sort alphabetically, methods keep plan order.
void emit_table(const ResultTable& table, const std::filesystem::path& dir);
void emit_heatmap(const HeatmapGrid& grid, const std::filesystem::path& dir);

// Rebuilds the human-readable files from the machine files in `dir`.
void report_from_machine_files(const std::filesystem::path& dir);

// --- Audit ------------------------------------------------------------------

// Recomputes every table (and heatmap) number from the emitted traces and
// compares against the machine files.
struct AuditReport {
  struct Item {
    std::string label;
    double expected = 0.0;  // from the machine file
    double actual = 0.0;    // recomputed from traces
    bool ok = false;
  };
  std::vector<Item> items;
  bool ok = true;
};
AuditReport audit_output_dir(const std::filesystem::path& dir, double tolerance = 1e-9);

}  // namespace llmens

#endif
