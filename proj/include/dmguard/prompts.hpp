#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dmguard {

enum class TemplateId { clf_agent1, clf_agent2, resp_agent1, resp_agent2 };

inline constexpr std::array<TemplateId, 4> kAllTemplates = {TemplateId::clf_agent1, TemplateId::clf_agent2,
                                                            TemplateId::resp_agent1, TemplateId::resp_agent2};

[[nodiscard]] std::string_view template_name(TemplateId id) noexcept;
/// Throws ConfigError for unknown names.
[[nodiscard]] TemplateId template_from_name(std::string_view name);
[[nodiscard]] bool is_classification(TemplateId id) noexcept;

/// Fully substituted system/user prompt pair ready for dispatch.
struct PromptBundle {
  std::string system;
  std::string user;
  TemplateId template_id = TemplateId::clf_agent1;
};

/// One of the nine engagement strategies offered to the responder agents.
struct Strategy {
  int index = 0;
  std::string text;
};

using PromptVars = std::map<std::string, std::string, std::less<>>;

/// Agent prompt texts plus the few-shot block and strategy catalog they embed.
///
/// Templates use `{name}` placeholders. `{csv_input}` and `{previous_result}`
/// must be supplied by the caller; `{few_shot_examples}` and `{strategy_list}`
/// are filled from the catalog unless the caller overrides them.
class PromptCatalog {
 public:
  struct Template {
    std::string system;
    std::string user;
  };

  PromptCatalog(std::map<TemplateId, Template> templates, std::string few_shot_block,
                std::vector<Strategy> strategies, std::string strategy_version);

  /// Catalog compiled from the files under data/.
  static const PromptCatalog& builtin();

  [[nodiscard]] PromptCatalog with_few_shot(std::string block) const;

  [[nodiscard]] PromptBundle render(TemplateId id, const PromptVars& vars) const;

  /// Placeholders the caller has to provide for `id`.
  [[nodiscard]] std::vector<std::string> required_placeholders(TemplateId id) const;

  [[nodiscard]] const Template& raw(TemplateId id) const { return templates_.at(id); }
  [[nodiscard]] const std::vector<Strategy>& strategies() const noexcept { return strategies_; }
  [[nodiscard]] const std::string& strategy_version() const noexcept { return strategy_version_; }
  [[nodiscard]] const std::string& few_shot_block() const noexcept { return few_shot_; }
  /// Content hash of the template pair with catalog-provided blocks expanded.
  [[nodiscard]] std::string template_hash(TemplateId id) const;

  /// Numbered strategy lines as they appear in the responder prompts.
  [[nodiscard]] std::string strategy_list() const;

 private:
  std::map<TemplateId, Template> templates_;
  std::string few_shot_;
  std::vector<Strategy> strategies_;
  std::string strategy_version_;
};

[[nodiscard]] PromptBundle render_prompt(TemplateId id, const PromptVars& vars);

/// Parses `N. text` lines into a strategy list.
[[nodiscard]] std::vector<Strategy> parse_strategy_catalog(std::string_view text);

}  // namespace dmguard
