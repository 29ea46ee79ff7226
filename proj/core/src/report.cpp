#include "llmens/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "llmens/categorizer.hpp"
#include "llmens/combiners.hpp"
#include "llmens/situations.hpp"

namespace llmens {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// --- Statistics and formatting ---------------------------------------------

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty list");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::optional<double> improvement_pct(double candidate, double baseline) {
  if (baseline <= 0.0) return std::nullopt;
  return 100.0 * (candidate - baseline) / baseline;
}

std::string format_number_trimmed(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string format_cell(double mean, double std_dev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", std_dev);
  return format_number_trimmed(mean) + "(" + buf + ")";
}

std::string format_improvement(const std::optional<double>& pct) {
  if (!pct) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", *pct);
  std::string s(buf);
  if (s == "-0.0") s = "0.0";
  return s;
}

std::pair<std::string, std::string> mark_best(
    const std::map<std::string, double>& row) {
  if (row.size() < 2)
    throw std::invalid_argument("mark_best needs at least 2 methods");
  std::vector<std::pair<std::string, double>> entries(row.begin(), row.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return {entries[0].first, entries[1].first};
}

// --- Plans -------------------------------------------------------------------

namespace {

bool is_known_method(const std::string& name) {
  if (name == "best-single" || name == "llm-ens") return true;
  const auto& names = combiner_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::string format_param(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", value);
  return std::string(buf);
}

std::string format_full(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return std::string(buf);
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

void ExperimentPlan::validate() const {
  if (!is_registered_env(env_name))
    throw std::invalid_argument("unknown environment: " + env_name);
  if (methods.empty() && !heatmap)
    throw std::invalid_argument("plan needs methods or a heatmap section");
  for (const std::string& m : methods)
    if (!is_known_method(m)) throw std::invalid_argument("unknown method: " + m);
  if (!methods.empty()) {
    if (!agent_seeds.empty() && !agent_files.empty())
      throw std::invalid_argument("agent_seeds and agent_files are exclusive");
    if (agent_seeds.empty() && agent_files.empty())
      throw std::invalid_argument("plan needs agent_seeds or agent_files");
    const std::size_t agent_count =
        agent_files.empty() ? agent_seeds.size() : agent_files.size();
    const bool has_ensemble_method =
        std::any_of(methods.begin(), methods.end(),
                    [](const std::string& m) { return m != "best-single"; });
    if (has_ensemble_method && agent_count < 2)
      throw std::invalid_argument("ensemble methods need at least 2 agents");
  }
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
  if (cadence_k < 1) throw std::invalid_argument("k must be >= 1");
  if (categorizer != "oracle" && categorizer != "llm")
    throw std::invalid_argument("categorizer must be oracle or llm");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (profile_episodes < 1)
    throw std::invalid_argument("profile_episodes must be >= 1");
  if (output_dir.empty()) throw std::invalid_argument("output_dir must be set");
  agent_config.validate();
  if (heatmap) {
    if (heatmap->param != "learning_rate" && heatmap->param != "training_episodes")
      throw std::invalid_argument(
          "heatmap param must be learning_rate or training_episodes");
    if (heatmap->values.empty())
      throw std::invalid_argument("heatmap needs at least 1 value");
    if (heatmap->seeds.empty())
      throw std::invalid_argument("heatmap needs at least 1 seed");
  }
}

std::string ExperimentPlan::to_json() const {
  json doc;
  doc["env"] = env_name;
  doc["agent_seeds"] = agent_seeds;
  json files = json::array();
  for (const fs::path& p : agent_files) files.push_back(p.string());
  doc["agent_files"] = std::move(files);
  doc["methods"] = methods;
  doc["eval_episodes"] = eval_episodes;
  doc["eval_seed_base"] = eval_seed_base;
  doc["k"] = cadence_k;
  doc["categorizer"] = categorizer;
  doc["temperature"] = temperature;
  doc["agent_config"] = {
      {"learning_rate", agent_config.learning_rate},
      {"gamma", agent_config.gamma},
      {"epsilon_start", agent_config.epsilon_start},
      {"epsilon_min", agent_config.epsilon_min},
      {"epsilon_decay_per_step", agent_config.epsilon_decay_per_step},
      {"training_episodes", agent_config.training_episodes},
  };
  doc["profile_episodes"] = profile_episodes;
  doc["profile_seed_base"] = profile_seed_base;
  doc["retrain_per_eval"] = retrain_per_eval;
  doc["output_dir"] = output_dir.string();
  if (catalog_file) doc["catalog_file"] = catalog_file->string();
  if (heatmap) {
    doc["heatmap"] = {{"param", heatmap->param},
                      {"values", heatmap->values},
                      {"seeds", heatmap->seeds}};
  }
  doc["endpoint_url"] = endpoint_url;
  doc["model_name"] = model_name;
  doc["cache_dir"] = cache_dir.string();
  return doc.dump(2) + "\n";
}

ExperimentPlan ExperimentPlan::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed plan: ") + e.what());
  }
  try {
    ExperimentPlan plan;
    plan.env_name = doc.at("env").get<std::string>();
    plan.agent_seeds = doc.value("agent_seeds", std::vector<std::uint64_t>{});
    for (const std::string& p :
         doc.value("agent_files", std::vector<std::string>{}))
      plan.agent_files.emplace_back(p);
    plan.methods = doc.value("methods", std::vector<std::string>{});
    plan.eval_episodes = doc.value("eval_episodes", 5);
    plan.eval_seed_base = doc.value("eval_seed_base", std::uint64_t{10000});
    plan.cadence_k = doc.value("k", 30);
    plan.categorizer = doc.value("categorizer", std::string("oracle"));
    plan.temperature = doc.value("temperature", 1.0);
    if (doc.contains("agent_config")) {
      const json& cfg = doc["agent_config"];
      plan.agent_config.learning_rate = cfg.value("learning_rate", 0.1);
      plan.agent_config.gamma = cfg.value("gamma", 0.99);
      plan.agent_config.epsilon_start = cfg.value("epsilon_start", 1.0);
      plan.agent_config.epsilon_min = cfg.value("epsilon_min", 0.1);
      plan.agent_config.epsilon_decay_per_step =
          cfg.value("epsilon_decay_per_step", 0.99999);
      plan.agent_config.training_episodes = cfg.value("training_episodes", 5000);
    }
    plan.profile_episodes = doc.value("profile_episodes", 10);
    plan.profile_seed_base = doc.value("profile_seed_base", std::uint64_t{1000});
    plan.retrain_per_eval = doc.value("retrain_per_eval", false);
    plan.output_dir = doc.value("output_dir", std::string{});
    if (doc.contains("catalog_file"))
      plan.catalog_file = fs::path(doc["catalog_file"].get<std::string>());
    if (doc.contains("heatmap")) {
      HeatmapPlan hp;
      hp.param = doc["heatmap"].at("param").get<std::string>();
      hp.values = doc["heatmap"].at("values").get<std::vector<double>>();
      hp.seeds = doc["heatmap"].value("seeds", std::vector<std::uint64_t>{0, 1});
      plan.heatmap = std::move(hp);
    }
    plan.endpoint_url = doc.value("endpoint_url", std::string{});
    plan.model_name = doc.value("model_name", std::string("gpt-4o-mini"));
    plan.cache_dir = doc.value("cache_dir", std::string(".llmens-cache"));
    return plan;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed plan: ") + e.what());
  }
}

void ExperimentPlan::save(const fs::path& path) const {
  write_text_file(path, to_json());
}

ExperimentPlan ExperimentPlan::load(const fs::path& path) {
  return from_json(read_text_file(path));
}

// --- Table / heatmap emission ------------------------------------------------

void emit_table(const ResultTable& table, const fs::path& dir) {
  fs::create_directories(dir);

  // Machine file: plan-ordered methods within alphabetically sorted envs.
  std::vector<ResultRow> rows = table.rows;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ResultRow& a, const ResultRow& b) { return a.env < b.env; });
  std::ostringstream csv;
  csv << "env,method,mean,std,n\n";
  for (const ResultRow& r : rows) {
    csv << r.env << ',' << r.method << ',' << format_full(r.mean) << ','
        << format_full(r.std_dev) << ',' << r.n << '\n';
  }
  write_text_file(dir / "results.csv", csv.str());

  // Human file with best / second-best markers per env.
  std::ostringstream txt;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].env == rows[i].env) ++j;
    std::map<std::string, double> means;
    for (std::size_t k = i; k < j; ++k) means[rows[k].method] = rows[k].mean;
    std::string best, second;
    if (means.size() >= 2) std::tie(best, second) = mark_best(means);

    txt << "env: " << rows[i].env << "\n";
    std::size_t method_width = 6;
    for (std::size_t k = i; k < j; ++k)
      method_width = std::max(method_width, rows[k].method.size());
    for (std::size_t k = i; k < j; ++k) {
      const ResultRow& r = rows[k];
      const char mark = r.method == best ? '*' : r.method == second ? '_' : ' ';
      txt << "  " << mark << ' ' << std::left << std::setw(static_cast<int>(method_width + 2))
          << r.method << format_cell(r.mean, r.std_dev) << "  n=" << r.n << "\n";
    }
    i = j;
  }
  write_text_file(dir / "results.txt", txt.str());
}

void emit_heatmap(const HeatmapGrid& grid, const fs::path& dir) {
  fs::create_directories(dir);

  std::ostringstream csv;
  csv << "param,x,y,improvement_pct\n";
  for (std::size_t yi = 0; yi < grid.axis_y.size(); ++yi) {
    for (std::size_t xi = 0; xi < grid.axis_x.size(); ++xi) {
      csv << grid.param << ',' << format_param(grid.axis_x[xi]) << ','
          << format_param(grid.axis_y[yi]) << ',';
      const std::optional<double>& cell = grid.cells[yi][xi];
      csv << (cell ? format_full(*cell) : "n/a") << '\n';
    }
  }
  write_text_file(dir / "heatmap.csv", csv.str());

  std::ostringstream txt;
  txt << "improvement % of llm-ens over the better single agent (param: "
      << grid.param << ")\n";
  std::size_t width = 8;
  for (double v : grid.axis_x) width = std::max(width, format_param(v).size() + 3);
  txt << std::setw(10) << ' ';
  for (double v : grid.axis_x)
    txt << std::right << std::setw(static_cast<int>(width)) << ("x=" + format_param(v));
  txt << "\n";
  for (std::size_t yi = 0; yi < grid.axis_y.size(); ++yi) {
    txt << std::left << std::setw(10) << ("y=" + format_param(grid.axis_y[yi]));
    for (std::size_t xi = 0; xi < grid.axis_x.size(); ++xi)
      txt << std::right << std::setw(static_cast<int>(width))
          << format_improvement(grid.cells[yi][xi]);
    txt << "\n";
  }
  write_text_file(dir / "heatmap.txt", txt.str());
}

// --- Experiment execution ------------------------------------------------------

namespace {

struct EvalContext {
  std::vector<TrainedAgent> agents;
  RewardDistribution dist;
  std::vector<const TrainedAgent*> views() const {
    std::vector<const TrainedAgent*> out;
    for (const TrainedAgent& a : agents) out.push_back(&a);
    return out;
  }
  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const TrainedAgent& a : agents) out.push_back(a.agent_id);
    return out;
  }
};

class ExperimentRunner {
 public:
  ExperimentRunner(const ExperimentPlan& plan, std::shared_ptr<Transport> transport)
      : plan_(plan), transport_(std::move(transport)) {}

  ExperimentResult run() {
    plan_.validate();
    fs::create_directories(plan_.output_dir);
    write_text_file(plan_.output_dir / "plan.json", plan_.to_json());

    ExperimentResult result;
    if (!plan_.methods.empty()) run_table(result);
    if (plan_.heatmap) run_heatmap(result);
    emit_table(result.table, plan_.output_dir);
    if (result.heatmap) emit_heatmap(*result.heatmap, plan_.output_dir);
    return result;
  }

 private:
  std::shared_ptr<LlmGateway> gateway() {
    if (!gateway_) {
      GatewayConfig config;
      config.endpoint_url = plan_.endpoint_url;
      config.model_name = plan_.model_name;
      config.cache_dir = plan_.cache_dir;
      std::shared_ptr<Transport> transport = transport_;
      if (!transport) transport = make_http_transport(config.timeout_ms);
      gateway_ = std::make_shared<LlmGateway>(config, transport);
    }
    return gateway_;
  }

  SituationCatalog resolve_catalog() {
    if (plan_.catalog_file) return SituationCatalog::load(*plan_.catalog_file);
    if (plan_.categorizer == "oracle") return oracle_catalog(plan_.env_name);
    return generate_situation_catalog(*gateway(), env_spec(plan_.env_name));
  }

  std::unique_ptr<StateCategorizer> make_categorizer(const SituationCatalog& catalog) {
    if (plan_.categorizer == "oracle")
      return std::make_unique<OracleCategorizer>();
    CategorizerConfig config;
    config.cadence_k = plan_.cadence_k;
    return std::make_unique<LlmCategorizer>(gateway(), catalog, config);
  }

  TrainedAgent train_for(std::uint64_t seed, const AgentConfig& config,
                         const std::string& id) {
    return train_q_learning(plan_.env_name, config, seed, id);
  }

  RewardDistribution build_profile(const std::vector<const TrainedAgent*>& agents,
                                   const SituationCatalog& catalog) {
    CategorizerConfig config;
    config.cadence_k = plan_.cadence_k;
    RewardDistribution dist;
    for (const TrainedAgent* agent : agents) {
      auto categorizer = make_categorizer(catalog);
      for (const SegmentRecord& record :
           profile_agent(*agent, plan_.env_name, *categorizer, config,
                         plan_.profile_episodes, plan_.profile_seed_base))
        dist.update(record);
    }
    return dist;
  }

  EvalContext make_context(int eval_index, const SituationCatalog& catalog) {
    EvalContext ctx;
    if (!plan_.agent_files.empty()) {
      for (const fs::path& path : plan_.agent_files) {
        AgentLoadResult loaded = load_agent_file(path);
        if (!loaded.env_recognized || loaded.agent.env_name != plan_.env_name)
          throw std::runtime_error("agent " + loaded.agent.agent_id +
                                   " does not belong to " + plan_.env_name);
        ctx.agents.push_back(std::move(loaded.agent));
      }
    } else {
      for (std::uint64_t seed : plan_.agent_seeds) {
        const std::uint64_t train_seed =
            plan_.retrain_per_eval
                ? stream_seed(seed, "retrain", static_cast<std::uint64_t>(eval_index))
                : seed;
        ctx.agents.push_back(train_for(train_seed, plan_.agent_config,
                                       "seed" + std::to_string(seed)));
      }
    }
    ctx.dist = build_profile(ctx.views(), catalog);
    return ctx;
  }

  void write_run(const fs::path& subdir, int eval_index, const RunResult& run) {
    const fs::path dir = plan_.output_dir / subdir;
    fs::create_directories(dir);
    write_text_file(dir / ("run_" + std::to_string(eval_index) + ".json"),
                    run.to_json());
  }

  RunResult run_method_episode(const std::string& method, EvalContext& ctx,
                               const SituationCatalog& catalog,
                               std::uint64_t seed) {
    auto env = make_environment(plan_.env_name);
    if (method == "llm-ens") {
      auto categorizer = make_categorizer(catalog);
      EnsembleConfig config;
      config.cadence_k = plan_.cadence_k;
      config.combiner_temperature = plan_.temperature;
      config.rng_seed = seed;
      return run_llm_ens_episode(ctx.views(), ctx.dist, *categorizer, *env, config);
    }
    return run_combiner_episode(ctx.views(), method, *env, seed, plan_.temperature);
  }

  void run_table(ExperimentResult& result) {
    const SituationCatalog catalog = resolve_catalog();
    catalog.save(plan_.output_dir / "catalog.json");

    std::vector<EvalContext> contexts;
    contexts.push_back(make_context(0, catalog));
    if (plan_.retrain_per_eval && plan_.agent_files.empty()) {
      for (int e = 1; e < plan_.eval_episodes; ++e)
        contexts.push_back(make_context(e, catalog));
    }
    auto context_for = [&](int e) -> EvalContext& {
      return contexts[contexts.size() == 1 ? 0 : e];
    };

    // Persist the shared artifacts from the first context.
    const fs::path agents_dir = plan_.output_dir / "agents";
    fs::create_directories(agents_dir);
    for (const TrainedAgent& agent : contexts.front().agents)
      save_agent_file(agent, agents_dir / (agent.agent_id + ".json"));
    write_text_file(plan_.output_dir / "profile.json",
                    contexts.front().dist.to_json(catalog.content_hash()));

    for (const std::string& method : plan_.methods) {
      if (method == "best-single") {
        run_best_single(result, context_for, catalog);
        continue;
      }
      std::vector<double> returns;
      for (int e = 0; e < plan_.eval_episodes; ++e) {
        const RunResult run = run_method_episode(
            method, context_for(e), catalog,
            plan_.eval_seed_base + static_cast<std::uint64_t>(e));
        write_run(fs::path("traces") / method, e, run);
        returns.push_back(run.episode_return);
      }
      const auto [mean, std_dev] = mean_std(returns);
      result.table.rows.push_back(ResultRow{plan_.env_name, method, mean,
                                            std_dev, plan_.eval_episodes});
    }
  }

  template <typename ContextFor>
  void run_best_single(ExperimentResult& result, ContextFor&& context_for,
                       const SituationCatalog& /*catalog*/) {
    // Evaluate every constituent agent alone; the row reports the best
    // mean. Tie on means resolves to the smaller agent id.
    std::map<std::string, std::vector<double>> returns_by_id;
    for (int e = 0; e < plan_.eval_episodes; ++e) {
      EvalContext& ctx = context_for(e);
      for (const TrainedAgent& agent : ctx.agents) {
        auto env = make_environment(plan_.env_name);
        const RunResult run = run_single_agent_episode(
            agent, *env, plan_.eval_seed_base + static_cast<std::uint64_t>(e));
        write_run(fs::path("traces") / ("single-" + agent.agent_id), e, run);
        returns_by_id[agent.agent_id].push_back(run.episode_return);
      }
    }
    std::optional<ResultRow> best;
    for (const auto& [id, returns] : returns_by_id) {
      const auto [mean, std_dev] = mean_std(returns);
      if (!best || mean > best->mean) {
        best = ResultRow{plan_.env_name, "best-single", mean, std_dev,
                         plan_.eval_episodes};
      }
    }
    result.table.rows.push_back(*best);
  }

  void run_heatmap(ExperimentResult& result) {
    const HeatmapPlan& hp = *plan_.heatmap;
    const SituationCatalog catalog = resolve_catalog();
    catalog.save(plan_.output_dir / "catalog.json");

    // One agent per (param value, seed) grid point, shared across cells.
    struct GridAgent {
      TrainedAgent agent;
      std::vector<SegmentRecord> records;
      std::vector<double> single_returns;
    };
    std::map<std::pair<std::size_t, std::uint64_t>, GridAgent> grid_agents;
    CategorizerConfig profile_config;
    profile_config.cadence_k = plan_.cadence_k;

    for (std::size_t vi = 0; vi < hp.values.size(); ++vi) {
      for (std::uint64_t seed : hp.seeds) {
        AgentConfig config = plan_.agent_config;
        if (hp.param == "learning_rate") {
          config.learning_rate = hp.values[vi];
        } else {
          config.training_episodes = static_cast<int>(hp.values[vi]);
        }
        GridAgent ga;
        ga.agent = train_for(seed, config,
                             "p" + format_param(hp.values[vi]) + "-s" +
                                 std::to_string(seed));
        auto categorizer = make_categorizer(catalog);
        ga.records = profile_agent(ga.agent, plan_.env_name, *categorizer,
                                   profile_config, plan_.profile_episodes,
                                   plan_.profile_seed_base);
        for (int e = 0; e < plan_.eval_episodes; ++e) {
          auto env = make_environment(plan_.env_name);
          const RunResult run = run_single_agent_episode(
              ga.agent, *env, plan_.eval_seed_base + static_cast<std::uint64_t>(e));
          write_run(fs::path("heatmap_traces") / "singles" / ga.agent.agent_id,
                    e, run);
          ga.single_returns.push_back(run.episode_return);
        }
        grid_agents.emplace(std::make_pair(vi, seed), std::move(ga));
      }
    }

    HeatmapGrid grid;
    grid.param = hp.param;
    grid.axis_x = hp.values;
    grid.axis_y = hp.values;
    grid.cells.assign(hp.values.size(),
                      std::vector<std::optional<double>>(hp.values.size()));

    json manifest_cells = json::array();
    for (std::size_t yi = 0; yi < hp.values.size(); ++yi) {
      for (std::size_t xi = 0; xi < hp.values.size(); ++xi) {
        // The cell ensembles every grid agent of both axis values.
        std::vector<const GridAgent*> members;
        for (std::uint64_t seed : hp.seeds) members.push_back(&grid_agents.at({xi, seed}));
        if (yi != xi)
          for (std::uint64_t seed : hp.seeds) members.push_back(&grid_agents.at({yi, seed}));

        RewardDistribution dist;
        std::vector<const TrainedAgent*> agents;
        double best_single = -std::numeric_limits<double>::infinity();
        json member_ids = json::array();
        for (const GridAgent* ga : members) {
          agents.push_back(&ga->agent);
          member_ids.push_back(ga->agent.agent_id);
          for (const SegmentRecord& r : ga->records) dist.update(r);
          best_single = std::max(best_single, mean_std(ga->single_returns).first);
        }

        std::vector<double> returns;
        for (int e = 0; e < plan_.eval_episodes; ++e) {
          auto env = make_environment(plan_.env_name);
          auto categorizer = make_categorizer(catalog);
          EnsembleConfig config;
          config.cadence_k = plan_.cadence_k;
          config.combiner_temperature = plan_.temperature;
          config.rng_seed = plan_.eval_seed_base + static_cast<std::uint64_t>(e);
          const RunResult run =
              run_llm_ens_episode(agents, dist, *categorizer, *env, config);
          write_run(fs::path("heatmap_traces") /
                        (std::to_string(xi) + "_" + std::to_string(yi)) / "llm-ens",
                    e, run);
          returns.push_back(run.episode_return);
        }
        grid.cells[yi][xi] = improvement_pct(mean_std(returns).first, best_single);
        manifest_cells.push_back({{"xi", xi},
                                  {"yi", yi},
                                  {"x", hp.values[xi]},
                                  {"y", hp.values[yi]},
                                  {"agents", member_ids}});
      }
    }

    json manifest;
    manifest["param"] = hp.param;
    manifest["values"] = hp.values;
    manifest["seeds"] = hp.seeds;
    manifest["eval_episodes"] = plan_.eval_episodes;
    manifest["cells"] = std::move(manifest_cells);
    write_text_file(plan_.output_dir / "heatmap_manifest.json",
                    manifest.dump(2) + "\n");
    result.heatmap = std::move(grid);
  }

  ExperimentPlan plan_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<LlmGateway> gateway_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan,
                                std::shared_ptr<Transport> transport) {
  return ExperimentRunner(plan, std::move(transport)).run();
}

// --- Machine-file parsing and audit ---------------------------------------------

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream fs_line(line);
    std::string field;
    while (std::getline(fs_line, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

ResultTable parse_results_csv(const fs::path& path) {
  ResultTable table;
  const auto rows = read_csv(path);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 5)
      throw std::runtime_error("results.csv row with wrong field count");
    table.rows.push_back(ResultRow{rows[i][0], rows[i][1], std::stod(rows[i][2]),
                                   std::stod(rows[i][3]), std::stoi(rows[i][4])});
  }
  return table;
}

std::vector<double> returns_from_trace_dir(const fs::path& dir) {
  std::vector<double> returns;
  for (int e = 0;; ++e) {
    const fs::path path = dir / ("run_" + std::to_string(e) + ".json");
    if (!fs::exists(path)) break;
    const RunResult run = RunResult::from_json(read_text_file(path));
    // The return is recomputed from the steps, not read back: the audit
    // trusts the traces, nothing else.
    double total = 0.0;
    for (const TraceStep& s : run.trace.steps) total += s.reward;
    returns.push_back(total);
  }
  if (returns.empty())
    throw std::runtime_error("no traces under " + dir.string());
  return returns;
}

struct BestSingleStats {
  std::string agent_id;
  double mean = 0.0;
  double std_dev = 0.0;
};

BestSingleStats recompute_best_single(const fs::path& traces_dir) {
  std::map<std::string, std::vector<double>> by_id;
  for (const auto& entry : fs::directory_iterator(traces_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("single-", 0) != 0) continue;
    by_id[name.substr(7)] = returns_from_trace_dir(entry.path());
  }
  if (by_id.empty())
    throw std::runtime_error("no single-agent traces under " + traces_dir.string());
  std::optional<BestSingleStats> best;
  for (const auto& [id, returns] : by_id) {
    const auto [mean, std_dev] = mean_std(returns);
    if (!best || mean > best->mean) best = BestSingleStats{id, mean, std_dev};
  }
  return *best;
}

}  // namespace

void report_from_machine_files(const fs::path& dir) {
  if (fs::exists(dir / "results.csv"))
    emit_table(parse_results_csv(dir / "results.csv"), dir);
  if (fs::exists(dir / "heatmap.csv")) {
    const auto rows = read_csv(dir / "heatmap.csv");
    HeatmapGrid grid;
    std::vector<double> xs, ys;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 4)
        throw std::runtime_error("heatmap.csv row with wrong field count");
      grid.param = rows[i][0];
      const double x = std::stod(rows[i][1]);
      const double y = std::stod(rows[i][2]);
      if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
      if (std::find(ys.begin(), ys.end(), y) == ys.end()) ys.push_back(y);
    }
    grid.axis_x = xs;
    grid.axis_y = ys;
    grid.cells.assign(ys.size(), std::vector<std::optional<double>>(xs.size()));
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double x = std::stod(rows[i][1]);
      const double y = std::stod(rows[i][2]);
      const std::size_t xi = std::find(xs.begin(), xs.end(), x) - xs.begin();
      const std::size_t yi = std::find(ys.begin(), ys.end(), y) - ys.begin();
      if (rows[i][3] != "n/a") grid.cells[yi][xi] = std::stod(rows[i][3]);
    }
    emit_heatmap(grid, dir);
  }
}

AuditReport audit_output_dir(const fs::path& dir, double tolerance) {
  AuditReport report;
  auto check = [&](const std::string& label, double expected, double actual) {
    const bool ok = std::abs(expected - actual) <= tolerance;
    report.items.push_back(AuditReport::Item{label, expected, actual, ok});
    if (!ok) report.ok = false;
  };

  if (fs::exists(dir / "results.csv")) {
    const ResultTable table = parse_results_csv(dir / "results.csv");
    for (const ResultRow& row : table.rows) {
      if (row.method == "best-single") {
        const BestSingleStats best = recompute_best_single(dir / "traces");
        check(row.env + "/best-single/mean", row.mean, best.mean);
        check(row.env + "/best-single/std", row.std_dev, best.std_dev);
      } else {
        const std::vector<double> returns =
            returns_from_trace_dir(dir / "traces" / row.method);
        const auto [mean, std_dev] = mean_std(returns);
        check(row.env + "/" + row.method + "/mean", row.mean, mean);
        check(row.env + "/" + row.method + "/std", row.std_dev, std_dev);
        if (static_cast<int>(returns.size()) != row.n) {
          report.items.push_back(AuditReport::Item{
              row.env + "/" + row.method + "/n", static_cast<double>(row.n),
              static_cast<double>(returns.size()), false});
          report.ok = false;
        }
      }
    }
  }

  if (fs::exists(dir / "heatmap.csv") && fs::exists(dir / "heatmap_manifest.json")) {
    const json manifest = json::parse(read_text_file(dir / "heatmap_manifest.json"));
    const auto rows = read_csv(dir / "heatmap.csv");
    // Recomputed cell values keyed "xi_yi".
    std::map<std::string, std::optional<double>> recomputed;
    for (const json& cell : manifest.at("cells")) {
      const std::string key = std::to_string(cell.at("xi").get<int>()) + "_" +
                              std::to_string(cell.at("yi").get<int>());
      const std::vector<double> ens_returns = returns_from_trace_dir(
          dir / "heatmap_traces" / key / "llm-ens");
      double best_single = -std::numeric_limits<double>::infinity();
      for (const json& id : cell.at("agents")) {
        const std::vector<double> returns = returns_from_trace_dir(
            dir / "heatmap_traces" / "singles" / id.get<std::string>());
        best_single = std::max(best_single, mean_std(returns).first);
      }
      recomputed[key] = improvement_pct(mean_std(ens_returns).first, best_single);
    }
    const std::vector<double> values =
        manifest.at("values").get<std::vector<double>>();
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double x = std::stod(rows[i][1]);
      const double y = std::stod(rows[i][2]);
      auto index_of = [&](double v) {
        for (std::size_t k = 0; k < values.size(); ++k)
          if (format_param(values[k]) == format_param(v)) return k;
        throw std::runtime_error("heatmap axis value not in manifest");
      };
      const std::string key = std::to_string(index_of(x)) + "_" +
                              std::to_string(index_of(y));
      const std::optional<double>& actual = recomputed.at(key);
      if (rows[i][3] == "n/a") {
        const bool ok = !actual.has_value();
        report.items.push_back(AuditReport::Item{
            "heatmap/" + key, std::numeric_limits<double>::quiet_NaN(),
            actual.value_or(std::numeric_limits<double>::quiet_NaN()), ok});
        if (!ok) report.ok = false;
      } else {
        check("heatmap/" + key, std::stod(rows[i][3]),
              actual.value_or(std::numeric_limits<double>::quiet_NaN()));
      }
    }
  }

  if (report.items.empty()) {
    report.ok = false;
    report.items.push_back(AuditReport::Item{"no machine files found", 0, 0, false});
  }
  return report;
}

}  // namespace llmens
