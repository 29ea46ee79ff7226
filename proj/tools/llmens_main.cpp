// Command-line front end for the ensemble pipeline: train agents, generate
// or pin situation catalogs, profile agents per situation, run episodes
// under any method, and reproduce full comparison experiments.

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llmens/categorizer.hpp"
#include "llmens/combiners.hpp"
#include "llmens/ensemble.hpp"
#include "llmens/report.hpp"

namespace fs = std::filesystem;
using namespace llmens;

namespace {

struct GatewayFlags {
  std::string mock_script;
  std::string endpoint;
  std::string model = "gpt-4o-mini";
  std::string cache_dir = ".llmens-cache";

  void attach(CLI::App* cmd) {
    cmd->add_option("--mock-llm", mock_script,
                    "Scripted LLM responses (JSON file) instead of HTTP");
    cmd->add_option("--endpoint", endpoint, "Chat-completion endpoint URL");
    cmd->add_option("--model", model, "Model name");
    cmd->add_option("--cache-dir", cache_dir, "Completion cache directory");
  }

  std::shared_ptr<Transport> transport() const {
    if (mock_script.empty()) return nullptr;
    return std::make_shared<MockTransport>(load_mock_script(mock_script));
  }

  std::shared_ptr<LlmGateway> gateway() const {
    GatewayConfig config;
    config.endpoint_url = endpoint;
    config.model_name = model;
    config.cache_dir = cache_dir;
    std::shared_ptr<Transport> t = transport();
    if (!t) t = make_http_transport(config.timeout_ms);
    return std::make_shared<LlmGateway>(config, t);
  }
};

std::vector<TrainedAgent> load_agents(const std::vector<std::string>& files,
                                      const std::string& env_name) {
  if (files.empty()) throw std::runtime_error("no agent files given");
  std::vector<TrainedAgent> agents;
  for (const std::string& file : files) {
    AgentLoadResult loaded = load_agent_file(file);
    if (!loaded.env_recognized)
      std::cerr << "warning: agent " << loaded.agent.agent_id
                << " references unknown environment " << loaded.agent.env_name
                << "\n";
    if (!env_name.empty() && loaded.agent.env_name != env_name)
      throw std::runtime_error("agent " + loaded.agent.agent_id +
                               " belongs to " + loaded.agent.env_name);
    agents.push_back(std::move(loaded.agent));
  }
  return agents;
}

SituationCatalog resolve_catalog(const std::string& catalog_file,
                                 const std::string& categorizer,
                                 const std::string& env_name,
                                 const GatewayFlags& gw) {
  if (!catalog_file.empty()) return SituationCatalog::load(catalog_file);
  if (categorizer == "oracle") return oracle_catalog(env_name);
  auto gateway = gw.gateway();
  return generate_situation_catalog(*gateway, env_spec(env_name));
}

std::unique_ptr<StateCategorizer> resolve_categorizer(
    const std::string& categorizer, const SituationCatalog& catalog, int k,
    const GatewayFlags& gw) {
  if (categorizer == "oracle") return std::make_unique<OracleCategorizer>();
  CategorizerConfig config;
  config.cadence_k = k;
  return std::make_unique<LlmCategorizer>(gw.gateway(), catalog, config);
}

int cmd_train(const std::string& env_name, std::uint64_t seed,
              const AgentConfig& config, const std::string& id,
              const std::string& out_dir) {
  const TrainedAgent agent = train_q_learning(
      env_name, config, seed, id.empty() ? "seed" + std::to_string(seed) : id);
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / (agent.agent_id + ".json");
  save_agent_file(agent, path);
  std::cout << "trained " << agent.agent_id << " on " << env_name << " ("
            << config.training_episodes << " episodes) -> " << path.string()
            << "\n";
  return 0;
}

int cmd_gen_situations(const std::string& env_name, const std::string& categorizer,
                       const GatewayFlags& gw, const std::string& out_dir) {
  SituationCatalog catalog;
  if (categorizer == "oracle") {
    catalog = oracle_catalog(env_name);
  } else {
    auto gateway = gw.gateway();
    catalog = generate_situation_catalog(*gateway, env_spec(env_name));
  }
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / "catalog.json";
  catalog.save(path);
  std::cout << "catalog with " << catalog.size() << " situations -> "
            << path.string() << "\n";
  return 0;
}

int cmd_profile(const std::string& env_name, const std::vector<std::string>& agent_files,
                const std::string& catalog_file, const std::string& categorizer,
                int k, int episodes, std::uint64_t seed, const GatewayFlags& gw,
                const std::string& out_dir) {
  const std::vector<TrainedAgent> agents = load_agents(agent_files, env_name);
  const SituationCatalog catalog =
      resolve_catalog(catalog_file, categorizer, env_name, gw);
  CategorizerConfig config;
  config.cadence_k = k;
  RewardDistribution dist;
  for (const TrainedAgent& agent : agents) {
    auto cat = resolve_categorizer(categorizer, catalog, k, gw);
    for (const SegmentRecord& record :
         profile_agent(agent, env_name, *cat, config, episodes, seed))
      dist.update(record);
  }
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / "profile.json";
  dist.save(path, catalog.content_hash());
  std::cout << "profiled " << agents.size() << " agents over " << episodes
            << " episodes -> " << path.string() << "\n";
  return 0;
}

int cmd_run(const std::string& env_name, const std::vector<std::string>& agent_files,
            const std::string& method, const std::string& profile_file,
            const std::string& catalog_file, const std::string& categorizer,
            int k, int episodes, std::uint64_t seed, double temperature,
            const GatewayFlags& gw, const std::string& out_dir) {
  const std::vector<TrainedAgent> agents = load_agents(agent_files, env_name);
  std::vector<const TrainedAgent*> views;
  for (const TrainedAgent& a : agents) views.push_back(&a);

  fs::create_directories(fs::path(out_dir) / "traces" / method);

  auto run_one = [&](std::uint64_t episode_seed) -> RunResult {
    auto env = make_environment(env_name);
    if (method == "llm-ens") {
      const SituationCatalog catalog =
          resolve_catalog(catalog_file, categorizer, env_name, gw);
      RewardDistribution dist;
      if (!profile_file.empty()) {
        dist = RewardDistribution::load(profile_file, catalog.content_hash());
      } else {
        CategorizerConfig config;
        config.cadence_k = k;
        for (const TrainedAgent& agent : agents) {
          auto cat = resolve_categorizer(categorizer, catalog, k, gw);
          for (const SegmentRecord& r :
               profile_agent(agent, env_name, *cat, config, 10, 1000))
            dist.update(r);
        }
      }
      auto cat = resolve_categorizer(categorizer, catalog, k, gw);
      EnsembleConfig config;
      config.cadence_k = k;
      config.combiner_temperature = temperature;
      config.rng_seed = episode_seed;
      return run_llm_ens_episode(views, dist, *cat, *env, config);
    }
    if (method == "single") {
      if (views.size() != 1)
        throw std::runtime_error("method single needs exactly one agent");
      return run_single_agent_episode(*views[0], *env, episode_seed);
    }
    return run_combiner_episode(views, method, *env, episode_seed, temperature);
  };

  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    const RunResult run = run_one(seed + static_cast<std::uint64_t>(e));
    std::ofstream out(fs::path(out_dir) / "traces" / method /
                      ("run_" + std::to_string(e) + ".json"));
    out << run.to_json();
    returns.push_back(run.episode_return);
  }
  const auto [mean, std_dev] = mean_std(returns);
  std::cout << method << " over " << episodes << " episodes: "
            << format_cell(mean, std_dev) << "\n";
  return 0;
}

int cmd_compare(const std::string& plan_file, const std::string& out_override,
                const GatewayFlags& gw) {
  ExperimentPlan plan = ExperimentPlan::load(plan_file);
  if (!out_override.empty()) plan.output_dir = out_override;
  const ExperimentResult result = run_experiment(plan, gw.transport());
  std::cout << "results written to " << plan.output_dir.string() << "\n";
  for (const ResultRow& row : result.table.rows)
    std::cout << "  " << row.env << " " << row.method << " "
              << format_cell(row.mean, row.std_dev) << "\n";
  return 0;
}

int cmd_report(const std::string& out_dir) {
  report_from_machine_files(out_dir);
  std::cout << "re-rendered human-readable reports in " << out_dir << "\n";
  return 0;
}

int cmd_audit(const std::string& out_dir) {
  const AuditReport report = audit_output_dir(out_dir);
  for (const AuditReport::Item& item : report.items) {
    std::cout << (item.ok ? "ok   " : "FAIL ") << item.label
              << " expected=" << item.expected << " recomputed=" << item.actual
              << "\n";
  }
  std::cout << (report.ok ? "audit passed" : "audit FAILED") << " ("
            << report.items.size() << " numbers checked)\n";
  return report.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM-guided reinforcement-learning model ensemble"};
  app.require_subcommand(1);

  std::string env_name = "two-zone-corridor";
  std::uint64_t seed = 0;
  int k = 30;
  std::string categorizer = "oracle";
  std::string catalog_file;
  std::string out_dir = "out";
  double temperature = 1.0;

  // train
  auto* train = app.add_subcommand("train", "Train a tabular Q-learning agent");
  AgentConfig agent_config;
  std::string agent_id;
  train->add_option("--env", env_name, "Environment name");
  train->add_option("--seed", seed, "Training seed");
  train->add_option("--episodes", agent_config.training_episodes, "Training episodes");
  train->add_option("--alpha", agent_config.learning_rate, "Learning rate");
  train->add_option("--gamma", agent_config.gamma, "Discount factor");
  train->add_option("--epsilon-start", agent_config.epsilon_start, "Initial epsilon");
  train->add_option("--epsilon-min", agent_config.epsilon_min, "Minimum epsilon");
  train->add_option("--epsilon-decay", agent_config.epsilon_decay_per_step,
                    "Per-step epsilon decay");
  train->add_option("--id", agent_id, "Agent id (default seed<seed>)");
  train->add_option("--out", out_dir, "Output directory");

  // gen-situations
  auto* gen = app.add_subcommand("gen-situations",
                                 "Generate or export a situation catalog");
  GatewayFlags gen_gw;
  gen->add_option("--env", env_name, "Environment name");
  gen->add_option("--categorizer", categorizer, "oracle or llm")
      ->check(CLI::IsMember({"oracle", "llm"}));
  gen->add_option("--out", out_dir, "Output directory");
  gen_gw.attach(gen);

  // profile
  auto* profile = app.add_subcommand("profile",
                                     "Build the per-situation reward profile");
  GatewayFlags profile_gw;
  std::vector<std::string> agent_files;
  int profile_episodes = 10;
  profile->add_option("--env", env_name, "Environment name");
  profile->add_option("--agent", agent_files, "Agent file (repeatable)")->required();
  profile->add_option("--catalog", catalog_file, "Situation catalog file");
  profile->add_option("--categorizer", categorizer, "oracle or llm")
      ->check(CLI::IsMember({"oracle", "llm"}));
  profile->add_option("--k", k, "Categorization interval");
  profile->add_option("--episodes", profile_episodes, "Profiling episodes per agent");
  profile->add_option("--seed", seed, "Profiling seed base");
  profile->add_option("--out", out_dir, "Output directory");
  profile_gw.attach(profile);

  // run
  auto* run = app.add_subcommand("run", "Run evaluation episodes for one method");
  GatewayFlags run_gw;
  std::string method = "llm-ens";
  std::string profile_file;
  int run_episodes = 5;
  run->add_option("--env", env_name, "Environment name");
  run->add_option("--agent", agent_files, "Agent file (repeatable)")->required();
  run->add_option("--method", method,
                  "llm-ens, single, majority, rank, aggregate, boltzmann-add, "
                  "boltzmann-mul");
  run->add_option("--profile", profile_file, "Reward profile file");
  run->add_option("--catalog", catalog_file, "Situation catalog file");
  run->add_option("--categorizer", categorizer, "oracle or llm")
      ->check(CLI::IsMember({"oracle", "llm"}));
  run->add_option("--k", k, "Categorization interval");
  run->add_option("--episodes", run_episodes, "Evaluation episodes");
  run->add_option("--seed", seed, "Evaluation seed base");
  run->add_option("--temperature", temperature, "Boltzmann temperature");
  run->add_option("--out", out_dir, "Output directory");
  run_gw.attach(run);

  // compare
  auto* compare = app.add_subcommand("compare", "Run a full experiment plan");
  GatewayFlags compare_gw;
  std::string plan_file;
  std::string out_override;
  compare->add_option("--plan", plan_file, "Experiment plan (JSON)")->required();
  compare->add_option("--out", out_override, "Override the plan's output_dir");
  compare_gw.attach(compare);

  // report
  auto* report = app.add_subcommand("report",
                                    "Re-render reports from machine files");
  report->add_option("--out", out_dir, "Experiment output directory")->required();

  // audit
  auto* audit = app.add_subcommand("audit",
                                   "Recompute every reported number from traces");
  audit->add_option("--out", out_dir, "Experiment output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(env_name, seed, agent_config, agent_id, out_dir);
    if (gen->parsed())
      return cmd_gen_situations(env_name, categorizer, gen_gw, out_dir);
    if (profile->parsed())
      return cmd_profile(env_name, agent_files, catalog_file, categorizer, k,
                         profile_episodes, seed, profile_gw, out_dir);
    if (run->parsed())
      return cmd_run(env_name, agent_files, method, profile_file, catalog_file,
                     categorizer, k, run_episodes, seed, temperature, run_gw,
                     out_dir);
    if (compare->parsed()) return cmd_compare(plan_file, out_override, compare_gw);
    if (report->parsed()) return cmd_report(out_dir);
    if (audit->parsed()) return cmd_audit(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
