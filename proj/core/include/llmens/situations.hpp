#ifndef LLMENS_SITUATIONS_HPP
#define LLMENS_SITUATIONS_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "llmens/env.hpp"

namespace llmens {

struct Situation {
  int situation_id = 0;  // 1-based
  std::string name;
  std::string description;
};

enum class CatalogSource { kLlmGenerated, kOracle, kFile };

// Ordered situation catalog for one environment. Ids are contiguous 1..N.
struct SituationCatalog {
  std::string env_name;
  std::vector<Situation> situations;
  CatalogSource source = CatalogSource::kFile;

  void validate() const;  // throws std::invalid_argument
  int size() const { return static_cast<int>(situations.size()); }

  std::string to_json() const;
  static SituationCatalog from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static SituationCatalog load(const std::filesystem::path& path);

  // Stable content hash used to detect profiles built against a
  // different catalog.
  std::string content_hash() const;
};

struct CategorizerConfig {
  int cadence_k = 30;
  std::optional<int> fallback_situation;
};

// --- Prompt templates ---------------------------------------------------
// The template wording is fixed verbatim, including "input image"; the
// state's text rendering travels as a separate message. Set
// `observation_wording` to swap "image" for "observation".

std::string build_task_description(const EnvSpec& spec);
std::string build_situation_generation_prompt(const EnvSpec& spec);
std::string build_state_categorization_prompt(const SituationCatalog& catalog,
                                              const std::string& task_description,
                                              bool observation_wording = false);

// Renders a catalog in the Output Format 1 shape:
// "{Name1: desc1, Name2: desc2}". parse_output_format_1 inverts it.
std::string render_output_format_1(const SituationCatalog& catalog);

// Extracts the situation list from an LLM reply. Tolerates prose around
// the brace block and commas inside descriptions; rejects replies with no
// brace block, fewer than 2 situations, or duplicate names.
SituationCatalog parse_output_format_1(const std::string& text,
                                       const std::string& env_name);

// Extracts "{[situation ID], [reason]}" from an LLM reply. Falls back to
// scanning the whole text when no brace block exists; throws when no
// integer can be found.
struct CategorizationReply {
  int situation_id = 0;
  std::string reason;
};
CategorizationReply parse_output_format_2(const std::string& text);

// True on steps 0, K, 2K, ...; step 0 always categorizes.
bool should_categorize(int step_index, int cadence_k);

// Ground-truth situation for the built-in environments: corridor zone
// (1 or 2) or four-rooms room index (1..4).
int oracle_categorize(const std::string& env_name, const StateObs& state);

// The catalog the oracle categorizer's ids refer to.
SituationCatalog oracle_catalog(const std::string& env_name);

}  // namespace llmens

#endif
