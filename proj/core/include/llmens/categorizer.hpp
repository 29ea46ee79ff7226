#ifndef LLMENS_CATEGORIZER_HPP
#define LLMENS_CATEGORIZER_HPP

#include <memory>
#include <string>

#include "llmens/gateway.hpp"
#include "llmens/reward_profile.hpp"
#include "llmens/situations.hpp"

namespace llmens {

// Ground-truth categorizer backed by the environments' built-in
// zone/room structure.
class OracleCategorizer final : public StateCategorizer {
 public:
  int categorize(const Environment& env, const StateObs& state) override {
    calls_ += 1;
    return oracle_categorize(env.spec().name, state);
  }
  int call_count() const override { return calls_; }

 private:
  int calls_ = 0;
};

// Categorizes by sending the State Categorization prompt plus the state's
// text rendering to the gateway and parsing Output Format 2. Ids outside
// the catalog map to the configured fallback situation, or throw.
class LlmCategorizer final : public StateCategorizer {
 public:
  LlmCategorizer(std::shared_ptr<LlmGateway> gateway, SituationCatalog catalog,
                 CategorizerConfig config);

  int categorize(const Environment& env, const StateObs& state) override;
  int call_count() const override { return calls_; }

  const SituationCatalog& catalog() const { return catalog_; }

 private:
  std::shared_ptr<LlmGateway> gateway_;
  SituationCatalog catalog_;
  CategorizerConfig config_;
  std::string prompt_;
  int calls_ = 0;
};

// Generates a fresh situation catalog for an environment through the
// Situation Generation prompt.
SituationCatalog generate_situation_catalog(LlmGateway& gateway,
                                            const EnvSpec& spec);

}  // namespace llmens

#endif
