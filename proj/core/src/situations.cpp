#include "llmens/situations.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "llmens/rng.hpp"

namespace llmens {

using json = nlohmann::ordered_json;

namespace {
constexpr int kCatalogFormatVersion = 1;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Strips one layer of literal square brackets some models echo from the
// format description, e.g. "[Combat]" -> "Combat".
std::string strip_brackets(std::string s) {
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']')
    return trim(s.substr(1, s.size() - 2));
  return s;
}

std::string source_to_string(CatalogSource source) {
  switch (source) {
    case CatalogSource::kLlmGenerated: return "llm-generated";
    case CatalogSource::kOracle: return "oracle";
    case CatalogSource::kFile: return "file";
  }
  throw std::logic_error("unreachable");
}

CatalogSource source_from_string(const std::string& s) {
  if (s == "llm-generated") return CatalogSource::kLlmGenerated;
  if (s == "oracle") return CatalogSource::kOracle;
  if (s == "file") return CatalogSource::kFile;
  throw std::runtime_error("unknown catalog source: " + s);
}

void replace_all(std::string& text, std::string_view placeholder,
                 std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

void require_non_empty(const std::string& value, const char* field) {
  if (trim(value).empty())
    throw std::invalid_argument(std::string("empty template field: ") + field);
}

// Locates the span between the first '{' and the last '}' after it.
std::optional<std::string> brace_block(const std::string& text) {
  const std::size_t open = text.find('{');
  if (open == std::string::npos) return std::nullopt;
  const std::size_t close = text.rfind('}');
  if (close == std::string::npos || close <= open) return std::nullopt;
  return text.substr(open + 1, close - open - 1);
}

}  // namespace

void SituationCatalog::validate() const {
  if (env_name.empty()) throw std::invalid_argument("catalog: empty env_name");
  if (situations.size() < 2)
    throw std::invalid_argument("catalog needs at least 2 situations");
  std::set<std::string> names;
  for (std::size_t i = 0; i < situations.size(); ++i) {
    const Situation& s = situations[i];
    if (s.situation_id != static_cast<int>(i) + 1)
      throw std::invalid_argument("situation ids must be contiguous from 1");
    if (s.name.empty() || s.description.empty())
      throw std::invalid_argument("situation name/description must be non-empty");
    if (!names.insert(s.name).second)
      throw std::invalid_argument("duplicate situation name: " + s.name);
  }
}

std::string SituationCatalog::to_json() const {
  json doc;
  doc["format_version"] = kCatalogFormatVersion;
  doc["env_name"] = env_name;
  doc["source"] = source_to_string(source);
  json list = json::array();
  for (const Situation& s : situations) {
    list.push_back({{"id", s.situation_id},
                    {"name", s.name},
                    {"description", s.description}});
  }
  doc["situations"] = std::move(list);
  return doc.dump(2) + "\n";
}

SituationCatalog SituationCatalog::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed catalog: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kCatalogFormatVersion)
      throw std::runtime_error("unsupported catalog format version");
    SituationCatalog catalog;
    catalog.env_name = doc.at("env_name").get<std::string>();
    catalog.source = source_from_string(doc.at("source").get<std::string>());
    for (const json& item : doc.at("situations")) {
      catalog.situations.push_back(Situation{item.at("id").get<int>(),
                                             item.at("name").get<std::string>(),
                                             item.at("description").get<std::string>()});
    }
    catalog.validate();
    return catalog;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed catalog: ") + e.what());
  }
}

void SituationCatalog::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json();
}

SituationCatalog SituationCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string SituationCatalog::content_hash() const {
  // Source is excluded: reloading an llm-generated catalog from file must
  // not invalidate profiles built against it.
  json doc;
  doc["env_name"] = env_name;
  json list = json::array();
  for (const Situation& s : situations)
    list.push_back({{"id", s.situation_id},
                    {"name", s.name},
                    {"description", s.description}});
  doc["situations"] = std::move(list);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return std::string(hex);
}

std::string build_task_description(const EnvSpec& spec) {
  require_non_empty(spec.task_details, "TaskDetails");
  require_non_empty(spec.action_details, "ActionDetails");
  require_non_empty(spec.reward_details, "RewardDetails");
  require_non_empty(spec.end_conditions, "EndConditions");
  require_non_empty(spec.goal_details, "GoalDetails");
  std::string text =
      "The task is a reinforcement learning problem where an agent "
      "{TaskDetails}. The action space is {ActionDetails}. The agent "
      "receives a reward of {RewardDetails}. The game ends when "
      "{EndConditions}. The goal is to {GoalDetails}.";
  replace_all(text, "{TaskDetails}", spec.task_details);
  replace_all(text, "{ActionDetails}", spec.action_details);
  replace_all(text, "{RewardDetails}", spec.reward_details);
  replace_all(text, "{EndConditions}", spec.end_conditions);
  replace_all(text, "{GoalDetails}", spec.goal_details);
  return text;
}

std::string build_situation_generation_prompt(const EnvSpec& spec) {
  std::string text =
      "You are classifying all states in the Atari {EnvironmentName} "
      "environment into a few situations. {TaskDescription} Please provide "
      "your classification and a brief description of it. Only present the "
      "classification method you consider most reasonable, using as few "
      "categories as possible. {OutputFormat1}";
  replace_all(text, "{EnvironmentName}", spec.name);
  replace_all(text, "{TaskDescription}", build_task_description(spec));
  replace_all(text, "{OutputFormat1}",
              "Your output format should be: {[situation 1]: [description 1], "
              "[situation 2]: [description 2], ...}.");
  return text;
}

std::string build_state_categorization_prompt(const SituationCatalog& catalog,
                                              const std::string& task_description,
                                              bool observation_wording) {
  catalog.validate();
  if (trim(task_description).empty())
    throw std::invalid_argument("empty task description");
  std::string text =
      "In the Atari {EnvironmentName} environment, many different states "
      "may occur. {TaskDescription} The states faced by the agent can be "
      "divided into {SituationNum} general categories, which are listed as "
      "follows: {GeneratedSituations}. Please classify the input image into "
      "one of these situations and attach a brief reason for your "
      "conclusion. {OutputFormat2}";
  replace_all(text, "{EnvironmentName}", catalog.env_name);
  replace_all(text, "{TaskDescription}", task_description);
  replace_all(text, "{SituationNum}", std::to_string(catalog.size()));
  replace_all(text, "{GeneratedSituations}", render_output_format_1(catalog));
  replace_all(text, "{OutputFormat2}",
              "Use the output format: {[situation ID], [reason]}.");
  if (observation_wording)
    replace_all(text, "classify the input image", "classify the input observation");
  return text;
}

std::string render_output_format_1(const SituationCatalog& catalog) {
  std::string out = "{";
  for (std::size_t i = 0; i < catalog.situations.size(); ++i) {
    if (i > 0) out += ", ";
    out += catalog.situations[i].name + ": " + catalog.situations[i].description;
  }
  out += "}";
  return out;
}

SituationCatalog parse_output_format_1(const std::string& text,
                                       const std::string& env_name) {
  const std::optional<std::string> block = brace_block(text);
  if (!block) throw std::runtime_error("no {...} block in situation reply");

  SituationCatalog catalog;
  catalog.env_name = env_name;
  catalog.source = CatalogSource::kLlmGenerated;

  // Comma-separated "name: description" pairs. A comma segment without a
  // colon continues the previous description.
  std::istringstream in(*block);
  std::string segment;
  while (std::getline(in, segment, ',')) {
    const std::size_t colon = segment.find(':');
    if (colon == std::string::npos) {
      if (catalog.situations.empty()) {
        if (!trim(segment).empty())
          throw std::runtime_error("situation entry lacks a ':' separator");
        continue;
      }
      catalog.situations.back().description += ", " + trim(segment);
      continue;
    }
    Situation s;
    s.situation_id = static_cast<int>(catalog.situations.size()) + 1;
    s.name = strip_brackets(trim(segment.substr(0, colon)));
    s.description = strip_brackets(trim(segment.substr(colon + 1)));
    if (s.name.empty() || s.description.empty())
      throw std::runtime_error("situation entry with empty name or description");
    catalog.situations.push_back(std::move(s));
  }
  if (catalog.situations.size() < 2)
    throw std::runtime_error("fewer than 2 situations in reply");
  try {
    catalog.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("invalid situation reply: ") + e.what());
  }
  return catalog;
}

CategorizationReply parse_output_format_2(const std::string& text) {
  const std::string body = brace_block(text).value_or(text);

  std::size_t digits_begin = std::string::npos;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(body[i]))) {
      digits_begin = i;
      break;
    }
  }
  if (digits_begin == std::string::npos)
    throw std::runtime_error("no situation id in categorization reply");
  std::size_t digits_end = digits_begin;
  while (digits_end < body.size() &&
         std::isdigit(static_cast<unsigned char>(body[digits_end])))
    ++digits_end;

  CategorizationReply reply;
  reply.situation_id =
      std::stoi(body.substr(digits_begin, digits_end - digits_begin));

  std::string rest = body.substr(digits_end);
  // Drop the separator between the id and the reason, whatever it is.
  std::size_t b = 0;
  while (b < rest.size()) {
    const char c = rest[b];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ':' ||
        c == ';' || c == '-' || c == ']' || c == ')') {
      ++b;
      continue;
    }
    // UTF-8 em dash.
    if (b + 2 < rest.size() && static_cast<unsigned char>(c) == 0xe2 &&
        static_cast<unsigned char>(rest[b + 1]) == 0x80) {
      b += 3;
      continue;
    }
    break;
  }
  reply.reason = strip_brackets(trim(rest.substr(b)));
  return reply;
}

bool should_categorize(int step_index, int cadence_k) {
  if (step_index < 0) throw std::invalid_argument("negative step index");
  if (cadence_k < 1) throw std::invalid_argument("cadence must be >= 1");
  return step_index % cadence_k == 0;
}

int oracle_categorize(const std::string& env_name, const StateObs& state) {
  if (env_name == "two-zone-corridor") return state.state_id <= 5 ? 1 : 2;
  if (env_name == "four-rooms-forage")
    return four_rooms_room_of_cell(four_rooms_cell_of_observation(state.state_id));
  throw std::invalid_argument("unknown environment: " + env_name);
}

SituationCatalog oracle_catalog(const std::string& env_name) {
  SituationCatalog catalog;
  catalog.env_name = env_name;
  catalog.source = CatalogSource::kOracle;
  if (env_name == "two-zone-corridor") {
    catalog.situations = {
        {1, "Zone A", "the agent is at positions 0 to 5, where FORWARD earns reward"},
        {2, "Zone B", "the agent is at positions 6 to 11, where JUMP earns reward"},
    };
  } else if (env_name == "four-rooms-forage") {
    catalog.situations = {
        {1, "Room 1", "the agent is in the top-left room"},
        {2, "Room 2", "the agent is in the top-right room"},
        {3, "Room 3", "the agent is in the bottom-left room"},
        {4, "Room 4", "the agent is in the bottom-right room"},
    };
  } else {
    throw std::invalid_argument("unknown environment: " + env_name);
  }
  return catalog;
}

}  // namespace llmens
