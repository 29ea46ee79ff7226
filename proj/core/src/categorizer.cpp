#include "llmens/categorizer.hpp"

#include <stdexcept>

namespace llmens {

LlmCategorizer::LlmCategorizer(std::shared_ptr<LlmGateway> gateway,
                               SituationCatalog catalog, CategorizerConfig config)
    : gateway_(std::move(gateway)),
      catalog_(std::move(catalog)),
      config_(config) {
  if (!gateway_) throw std::invalid_argument("categorizer needs a gateway");
  catalog_.validate();
  prompt_ = build_state_categorization_prompt(
      catalog_, build_task_description(env_spec(catalog_.env_name)));
}

int LlmCategorizer::categorize(const Environment& env, const StateObs& /*state*/) {
  calls_ += 1;
  ChatRequest request;
  request.model = gateway_->config().model_name;
  request.temperature = gateway_->config().temperature;
  request.messages = {{"system", prompt_}, {"user", env.render()}};

  const std::string reply = gateway_->complete(request);
  const CategorizationReply parsed = parse_output_format_2(reply);
  if (parsed.situation_id >= 1 && parsed.situation_id <= catalog_.size())
    return parsed.situation_id;
  if (config_.fallback_situation)
    return *config_.fallback_situation;
  throw std::runtime_error("categorizer returned out-of-range situation id " +
                           std::to_string(parsed.situation_id) +
                           " and no fallback is configured");
}

SituationCatalog generate_situation_catalog(LlmGateway& gateway,
                                            const EnvSpec& spec) {
  ChatRequest request;
  request.model = gateway.config().model_name;
  request.temperature = gateway.config().temperature;
  request.messages = {{"user", build_situation_generation_prompt(spec)}};
  const std::string reply = gateway.complete(request);
  return parse_output_format_1(reply, spec.name);
}

}  // namespace llmens
