#include "dmguard/gateway.hpp"

#include "dmguard/errors.hpp"

namespace dmguard {

SamplingParams SamplingParams::for_template(TemplateId id, const SamplingDefaults& defaults,
                                            std::optional<std::int64_t> seed) {
  SamplingParams p;
  p.temperature = is_classification(id) ? defaults.classification_temperature : defaults.responder_temperature;
  p.top_p = defaults.top_p;
  p.max_tokens = defaults.max_tokens;
  p.seed = seed;
  return p;
}

void SamplingParams::validate() const {
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

}  // namespace dmguard
