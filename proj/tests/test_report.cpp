#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "llmens/report.hpp"

using namespace llmens;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("llmens-report-" + tag + "-" +
                                        std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// The corridor experiment from the module examples: two hand-built
// one-action agents, oracle categorizer, K=3.
ExperimentPlan corridor_plan(const fs::path& work) {
  const TrainedAgent fwd = make_fixed_action_agent("two-zone-corridor", 0, "fwd");
  const TrainedAgent jmp = make_fixed_action_agent("two-zone-corridor", 1, "jmp");
  fs::create_directories(work / "agents_in");
  save_agent_file(fwd, work / "agents_in" / "fwd.json");
  save_agent_file(jmp, work / "agents_in" / "jmp.json");

  ExperimentPlan plan;
  plan.env_name = "two-zone-corridor";
  plan.agent_files = {work / "agents_in" / "fwd.json",
                      work / "agents_in" / "jmp.json"};
  plan.methods = {"best-single", "llm-ens"};
  plan.eval_episodes = 5;
  plan.eval_seed_base = 10000;
  plan.cadence_k = 3;
  plan.categorizer = "oracle";
  plan.profile_episodes = 1;
  plan.output_dir = work / "out";
  return plan;
}

std::map<std::string, std::string> snapshot_files(const fs::path& dir) {
  std::map<std::string, std::string> bytes;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    bytes[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  }
  return bytes;
}

}  // namespace

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> flat = {5.0, 5.0, 5.0};
  auto [m1, s1] = mean_std(flat);
  CHECK(m1 == 5.0);
  CHECK(s1 == 0.0);

  const std::vector<double> ramp = {1.0, 2.0, 3.0, 4.0, 5.0};
  auto [m2, s2] = mean_std(ramp);
  CHECK(m2 == doctest::Approx(3.0));
  CHECK(s2 == doctest::Approx(1.5811388300841898).epsilon(1e-12));

  const std::vector<double> one = {7.5};
  auto [m3, s3] = mean_std(one);
  CHECK(m3 == 7.5);
  CHECK(s3 == 0.0);

  CHECK_THROWS_AS(mean_std({}), std::invalid_argument);
}

TEST_CASE("cell formatting follows the mean(std) convention") {
  CHECK(format_cell(10400.0, 4159.33) == "10400(4159.33)");
  CHECK(format_cell(-1.4, 6.23) == "-1.4(6.23)");
  CHECK(format_cell(0.0, 3.16) == "0(3.16)");
  CHECK(format_cell(4.2, 2.17) == "4.2(2.17)");
  CHECK(format_cell(5.0, 0.0) == "5(0.00)");
}

TEST_CASE("improvement percentages") {
  auto battlezone = improvement_pct(10400.0, 8600.0);
  REQUIRE(battlezone.has_value());
  CHECK(*battlezone == doctest::Approx(20.9).epsilon(0.0025));
  CHECK(format_improvement(battlezone) == "20.9");

  auto mspacman = improvement_pct(1116.0, 738.0);
  REQUIRE(mspacman.has_value());
  CHECK(*mspacman == doctest::Approx(51.2).epsilon(0.001));
  CHECK(format_improvement(mspacman) == "51.2");

  CHECK(*improvement_pct(42.0, 42.0) == 0.0);
  CHECK_FALSE(improvement_pct(5.0, 0.0).has_value());
  CHECK_FALSE(improvement_pct(5.0, -1.0).has_value());
  CHECK(format_improvement(std::nullopt) == "n/a");
}

TEST_CASE("best and second-best marking") {
  const std::map<std::string, double> row = {
      {"LLM-Ens", 10400.0}, {"Agg", 8600.0}, {"MV", 5000.0}};
  const auto [best, second] = mark_best(row);
  CHECK(best == "LLM-Ens");
  CHECK(second == "Agg");

  const auto [b2, s2] = mark_best({{"a", 1.0}, {"b", 2.0}});
  CHECK(b2 == "b");
  CHECK(s2 == "a");

  // Two-way tie at the top: lexicographically first wins.
  const auto [b3, s3] = mark_best({{"beta", 7.0}, {"alpha", 7.0}, {"gamma", 1.0}});
  CHECK(b3 == "alpha");
  CHECK(s3 == "beta");

  CHECK_THROWS_AS(mark_best({{"only", 1.0}}), std::invalid_argument);
}

TEST_CASE("plan json round trips") {
  TempDir tmp("plan");
  ExperimentPlan plan = corridor_plan(tmp.path);
  plan.heatmap = HeatmapPlan{"learning_rate", {0.05, 0.1}, {0, 1}};
  const ExperimentPlan parsed = ExperimentPlan::from_json(plan.to_json());
  CHECK(parsed.env_name == plan.env_name);
  CHECK(parsed.agent_files == plan.agent_files);
  CHECK(parsed.methods == plan.methods);
  CHECK(parsed.eval_episodes == plan.eval_episodes);
  CHECK(parsed.cadence_k == plan.cadence_k);
  CHECK(parsed.profile_episodes == plan.profile_episodes);
  REQUIRE(parsed.heatmap.has_value());
  CHECK(parsed.heatmap->param == "learning_rate");
  CHECK(parsed.heatmap->values == plan.heatmap->values);
  CHECK(parsed.to_json() == plan.to_json());
}

TEST_CASE("plan validation catches bad configurations") {
  TempDir tmp("planv");
  ExperimentPlan plan = corridor_plan(tmp.path);
  CHECK_NOTHROW(plan.validate());

  ExperimentPlan bad = plan;
  bad.methods = {"telepathy"};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = plan;
  bad.agent_files = {plan.agent_files[0]};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // llm-ens needs 2

  bad = plan;
  bad.categorizer = "human";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = plan;
  bad.methods.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // nothing to run

  bad = plan;
  bad.agent_seeds = {1, 2};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // seeds xor files
}

TEST_CASE("table emission shapes and markers") {
  TempDir tmp("emit");
  ResultTable table;
  table.rows.push_back({"corridor", "llm-ens", 11.0, 0.0, 5});
  emit_table(table, tmp.path);
  const std::string csv = slurp(tmp.path / "results.csv");
  CHECK(csv == "env,method,mean,std,n\ncorridor,llm-ens,11,0,5\n");

  table.rows.push_back({"corridor", "best-single", 6.0, 0.5, 5});
  emit_table(table, tmp.path);
  const std::string txt = slurp(tmp.path / "results.txt");
  CHECK(txt.find("* llm-ens") != std::string::npos);
  CHECK(txt.find("_ best-single") != std::string::npos);
  CHECK(txt.find("11(0.00)") != std::string::npos);
  CHECK(txt.find("6(0.50)") != std::string::npos);
}

TEST_CASE("heatmap emission shape") {
  TempDir tmp("heat");
  HeatmapGrid grid;
  grid.param = "learning_rate";
  grid.axis_x = {0.05, 0.1};
  grid.axis_y = {0.05, 0.1};
  grid.cells = {{12.5, std::nullopt}, {3.0, -4.25}};
  emit_heatmap(grid, tmp.path);
  const std::string csv = slurp(tmp.path / "heatmap.csv");
  std::istringstream lines(csv);
  std::string line;
  int rows = 0;
  std::getline(lines, line);
  CHECK(line == "param,x,y,improvement_pct");
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);
  CHECK(csv.find("n/a") != std::string::npos);
  const std::string txt = slurp(tmp.path / "heatmap.txt");
  CHECK(txt.find("x=0.05") != std::string::npos);
  CHECK(txt.find("12.5") != std::string::npos);
}

TEST_CASE("the corridor experiment reproduces the module example") {
  TempDir tmp("corridor");
  const ExperimentPlan plan = corridor_plan(tmp.path);
  const ExperimentResult result = run_experiment(plan);

  REQUIRE(result.table.rows.size() == 2);
  const ResultRow& best = result.table.rows[0];
  const ResultRow& ens = result.table.rows[1];
  CHECK(best.method == "best-single");
  CHECK(best.mean == doctest::Approx(6.0));
  CHECK(best.std_dev == doctest::Approx(0.0));
  CHECK(ens.method == "llm-ens");
  CHECK(ens.mean == doctest::Approx(11.0));
  CHECK(ens.std_dev == doctest::Approx(0.0));

  // Golden machine table, pinned from the first verified run.
  CHECK(slurp(plan.output_dir / "results.csv") ==
        "env,method,mean,std,n\n"
        "two-zone-corridor,best-single,6,0,5\n"
        "two-zone-corridor,llm-ens,11,0,5\n");

  // Artifacts on disk.
  CHECK(fs::exists(plan.output_dir / "plan.json"));
  CHECK(fs::exists(plan.output_dir / "catalog.json"));
  CHECK(fs::exists(plan.output_dir / "profile.json"));
  CHECK(fs::exists(plan.output_dir / "traces" / "llm-ens" / "run_4.json"));
  CHECK(fs::exists(plan.output_dir / "traces" / "single-fwd" / "run_0.json"));
  CHECK(fs::exists(plan.output_dir / "traces" / "single-jmp" / "run_0.json"));
}

TEST_CASE("identical plans produce byte-identical outputs") {
  TempDir tmp("repro");
  const ExperimentPlan plan = corridor_plan(tmp.path);
  run_experiment(plan);
  const auto first = snapshot_files(plan.output_dir);
  fs::remove_all(plan.output_dir);
  run_experiment(plan);
  const auto second = snapshot_files(plan.output_dir);
  REQUIRE(first.size() == second.size());
  for (const auto& [name, bytes] : first) {
    REQUIRE(second.count(name) == 1);
    CHECK_MESSAGE(second.at(name) == bytes, "file differs: ", name);
  }
}

TEST_CASE("audit recomputes the table from traces") {
  TempDir tmp("audit");
  const ExperimentPlan plan = corridor_plan(tmp.path);
  run_experiment(plan);
  const AuditReport report = audit_output_dir(plan.output_dir);
  CHECK(report.ok);
  CHECK(report.items.size() >= 4);  // mean+std for two methods

  // Tampering with a step reward inside a trace breaks the audit (the
  // audit recomputes returns from steps, not from the stored summary).
  const fs::path trace = plan.output_dir / "traces" / "llm-ens" / "run_0.json";
  RunResult tampered = RunResult::from_json(slurp(trace));
  REQUIRE(tampered.trace.steps[0].reward == 1.0);
  tampered.trace.steps[0].reward = 0.0;
  std::ofstream(trace) << tampered.to_json();
  const AuditReport broken = audit_output_dir(plan.output_dir);
  CHECK_FALSE(broken.ok);
}

TEST_CASE("report regenerates human files from machine files") {
  TempDir tmp("rerender");
  const ExperimentPlan plan = corridor_plan(tmp.path);
  run_experiment(plan);
  const std::string original = slurp(plan.output_dir / "results.txt");
  fs::remove(plan.output_dir / "results.txt");
  report_from_machine_files(plan.output_dir);
  CHECK(slurp(plan.output_dir / "results.txt") == original);
}

TEST_CASE("retrain-per-eval changes training seeds per evaluation run") {
  TempDir tmp("retrain");
  ExperimentPlan plan;
  plan.env_name = "two-zone-corridor";
  plan.agent_seeds = {0, 1};
  plan.methods = {"llm-ens"};
  plan.eval_episodes = 2;
  plan.cadence_k = 3;
  plan.agent_config.training_episodes = 2000;
  plan.profile_episodes = 1;
  plan.output_dir = tmp.path / "out";
  plan.retrain_per_eval = true;
  const ExperimentResult result = run_experiment(plan);
  REQUIRE(result.table.rows.size() == 1);
  // Trained corridor agents are optimal regardless of seed.
  CHECK(result.table.rows[0].mean == doctest::Approx(11.0));
}

TEST_CASE("heatmap experiments fill every cell and survive the audit") {
  TempDir tmp("heatexp");
  ExperimentPlan plan;
  plan.env_name = "two-zone-corridor";
  plan.methods = {};
  plan.eval_episodes = 3;
  plan.cadence_k = 3;
  plan.categorizer = "oracle";
  plan.profile_episodes = 1;
  plan.agent_config.training_episodes = 2000;
  plan.output_dir = tmp.path / "out";
  plan.heatmap = HeatmapPlan{"learning_rate", {0.1, 0.2}, {0, 1}};

  const ExperimentResult result = run_experiment(plan);
  REQUIRE(result.heatmap.has_value());
  const HeatmapGrid& grid = *result.heatmap;
  REQUIRE(grid.axis_x.size() == 2);
  REQUIRE(grid.cells.size() == 2);
  for (const auto& row : grid.cells)
    for (const auto& cell : row) {
      REQUIRE(cell.has_value());
      // Trained corridor agents are all optimal, so ensembling them
      // neither helps nor hurts.
      CHECK(*cell == doctest::Approx(0.0));
    }
  CHECK(fs::exists(plan.output_dir / "heatmap.csv"));
  CHECK(fs::exists(plan.output_dir / "heatmap_manifest.json"));

  const AuditReport report = audit_output_dir(plan.output_dir);
  CHECK(report.ok);
  bool saw_heatmap_item = false;
  for (const auto& item : report.items)
    if (item.label.rfind("heatmap/", 0) == 0) saw_heatmap_item = true;
  CHECK(saw_heatmap_item);
}
