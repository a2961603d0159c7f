#pragma once

#include <map>
#include <string>
#include <string_view>

#include "codetool/model.hpp"

namespace codetool {

inline constexpr std::string_view kPromptVersion = "v1";

/// Built-in template text for a stage (compiled in from prompts/v1).
const std::string& prompt_template(Stage stage);

using Slots = std::map<std::string, std::string, std::less<>>;

/// Replaces `{name}` for every provided slot in a single left-to-right pass;
/// substituted text is never rescanned. Braces naming anything else are left
/// as they are. Throws TemplateError when a provided slot does not occur.
std::string render_template(std::string_view text, const Slots& slots);

/// render_template over the stage's built-in template.
std::string render_prompt(Stage stage, const Slots& slots);

}  // namespace codetool
