#include "dmguard/prompts.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "dmguard/errors.hpp"
#include "dmguard/text.hpp"

namespace dmguard {

namespace detail {
const std::map<std::string, std::string_view>& embedded_catalog();
}

std::string_view template_name(TemplateId id) noexcept {
  switch (id) {
    case TemplateId::clf_agent1: return "clf_agent1";
    case TemplateId::clf_agent2: return "clf_agent2";
    case TemplateId::resp_agent1: return "resp_agent1";
    case TemplateId::resp_agent2: return "resp_agent2";
  }
  return "unknown";
}

TemplateId template_from_name(std::string_view name) {
  for (const auto id : kAllTemplates) {
    if (template_name(id) == name) return id;
  }
  throw ConfigError(fmt::format("unknown template id '{}'", name));
}

bool is_classification(TemplateId id) noexcept {
  return id == TemplateId::clf_agent1 || id == TemplateId::clf_agent2;
}

namespace {

constexpr std::string_view kFewShotVar = "few_shot_examples";
constexpr std::string_view kStrategyVar = "strategy_list";

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

/// Calls `on_text` for literal runs and `on_var` for each `{name}` placeholder.
template <typename OnText, typename OnVar>
void scan_template(std::string_view tpl, OnText on_text, OnVar on_var) {
  std::size_t i = 0;
  std::size_t literal_start = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tpl.size() && is_placeholder_char(tpl[j])) ++j;
      if (j < tpl.size() && tpl[j] == '}' && j > i + 1) {
        on_text(tpl.substr(literal_start, i - literal_start));
        on_var(tpl.substr(i + 1, j - i - 1));
        i = j + 1;
        literal_start = i;
        continue;
      }
    }
    ++i;
  }
  on_text(tpl.substr(literal_start));
}

std::string_view strip_trailing_newline(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<Strategy> parse_strategy_catalog(std::string_view text) {
  std::vector<Strategy> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    int index = 0;
    const auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), index);
    if (ec != std::errc() || p == line.data() + line.size() || *p != '.') {
      throw ConfigError(fmt::format("malformed strategy line '{}'", line));
    }
    out.push_back(Strategy{index, std::string(text::trim(std::string_view(p + 1, line.data() + line.size() - p - 1)))});
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].index != static_cast<int>(i) + 1) throw ConfigError("strategy catalog must be numbered 1..N");
  }
  return out;
}

PromptCatalog::PromptCatalog(std::map<TemplateId, Template> templates, std::string few_shot_block,
                             std::vector<Strategy> strategies, std::string strategy_version)
    : templates_(std::move(templates)),
      few_shot_(std::move(few_shot_block)),
      strategies_(std::move(strategies)),
      strategy_version_(std::move(strategy_version)) {
  for (const auto id : kAllTemplates) {
    if (!templates_.contains(id)) throw ConfigError(fmt::format("catalog lacks template {}", template_name(id)));
  }
}

const PromptCatalog& PromptCatalog::builtin() {
  static const PromptCatalog catalog = [] {
    const auto& files = detail::embedded_catalog();
    auto file = [&](const std::string& name) { return std::string(strip_trailing_newline(files.at(name))); };
    std::map<TemplateId, Template> templates;
    for (const auto id : kAllTemplates) {
      const auto base = std::string(template_name(id));
      templates[id] = Template{file(base + ".system.txt"), file(base + ".user.txt")};
    }
    return PromptCatalog(std::move(templates), file("few_shot_synthetic.txt"),
                         parse_strategy_catalog(files.at("strategies_v1.txt")), "v1");
  }();
  return catalog;
}

PromptCatalog PromptCatalog::with_few_shot(std::string block) const {
  PromptCatalog copy = *this;
  copy.few_shot_ = std::string(strip_trailing_newline(block));
  return copy;
}

std::string PromptCatalog::strategy_list() const {
  std::string out;
  for (const auto& s : strategies_) {
    if (!out.empty()) out.push_back('\n');
    out += fmt::format("{}. {}", s.index, s.text);
  }
  return out;
}

std::vector<std::string> PromptCatalog::required_placeholders(TemplateId id) const {
  std::vector<std::string> names;
  auto collect = [&](std::string_view tpl) {
    scan_template(
        tpl, [](std::string_view) {},
        [&](std::string_view var) {
          if (var == kFewShotVar || var == kStrategyVar) return;
          if (std::find(names.begin(), names.end(), var) == names.end()) names.emplace_back(var);
        });
  };
  collect(templates_.at(id).system);
  collect(templates_.at(id).user);
  return names;
}

PromptBundle PromptCatalog::render(TemplateId id, const PromptVars& vars) const {
  const auto& tpl = templates_.at(id);
  auto substitute = [&](std::string_view text) {
    std::string out;
    scan_template(
        text, [&](std::string_view literal) { out += literal; },
        [&](std::string_view var) {
          if (const auto it = vars.find(var); it != vars.end()) {
            out += it->second;
          } else if (var == kFewShotVar) {
            out += few_shot_;
          } else if (var == kStrategyVar) {
            out += strategy_list();
          } else {
            throw TemplateError(fmt::format("template {} needs placeholder {{{}}}", template_name(id), var));
          }
        });
    return out;
  };
  return PromptBundle{substitute(tpl.system), substitute(tpl.user), id};
}

std::string PromptCatalog::template_hash(TemplateId id) const {
  const auto& tpl = templates_.at(id);
  std::string material = tpl.system;
  material += '\x1f';
  material += tpl.user;
  material += '\x1f';
  material += few_shot_;
  material += '\x1f';
  material += strategy_list();
  return text::hex64(text::fnv1a64(material));
}

PromptBundle render_prompt(TemplateId id, const PromptVars& vars) { return PromptCatalog::builtin().render(id, vars); }

}  // namespace dmguard
