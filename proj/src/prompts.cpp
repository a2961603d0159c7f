#include "codetool/prompts.hpp"

#include <set>

namespace codetool {

namespace detail {
extern const std::string kPrompt_task_to_code;
extern const std::string kPrompt_plan;
extern const std::string kPrompt_select;
extern const std::string kPrompt_codegen;
extern const std::string kPrompt_reformulate;
extern const std::string kPrompt_review;
}  // namespace detail

const std::string& prompt_template(Stage stage) {
  switch (stage) {
    case Stage::t2c: return detail::kPrompt_task_to_code;
    case Stage::plan: return detail::kPrompt_plan;
    case Stage::select: return detail::kPrompt_select;
    case Stage::codegen: return detail::kPrompt_codegen;
    case Stage::reformulate: return detail::kPrompt_reformulate;
    case Stage::review: return detail::kPrompt_review;
  }
  throw TemplateError("unknown stage");
}

namespace {

bool is_slot_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

std::string render_template(std::string_view text, const Slots& slots) {
  std::string out;
  out.reserve(text.size());
  std::set<std::string_view> used;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_slot_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        const auto name = text.substr(i + 1, j - i - 1);
        if (auto it = slots.find(name); it != slots.end()) {
          out += it->second;
          used.insert(it->first);
          i = j + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  for (const auto& [name, value] : slots) {
    if (!used.count(name)) throw TemplateError("template has no slot {" + name + "}");
  }
  return out;
}

std::string render_prompt(Stage stage, const Slots& slots) {
  return render_template(prompt_template(stage), slots);
}

}  // namespace codetool
