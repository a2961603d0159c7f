#pragma once

// Lexical recognizers for the guest-language shapes the prompts ask for:
// function scaffolds, step comments, `call_api(...)` placeholders, and the
// helper functions of a generated program.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codetool/model.hpp"

namespace codetool {

/// Fixed lexical conventions of the guest language.
struct LexGrammar {
  static constexpr std::string_view def_keyword = "def";
  static constexpr std::string_view docstring_single = "'''";
  static constexpr std::string_view docstring_double = "\"\"\"";
  static constexpr std::string_view comment_prefix = "#";
  static constexpr std::string_view main_guard = "if __name__ == \"__main__\":";
  static constexpr std::string_view call_api_token = "call_api";
  static constexpr std::string_view api_path_marker = "# api_path:";
  static constexpr std::string_view step_prefix = "# Step";
};

/// Parses a function scaffold: exactly one top-level function with a
/// docstring, a body holding only comments or `pass`/`...`, and a main
/// guard that invokes it. Throws ScaffoldError.
Scaffold parse_scaffold(std::string_view source);

/// Inverse of parse_scaffold.
std::string render_scaffold(const Scaffold& scaffold);

/// Inserts `# Step k. <text>` lines right after the docstring. Subtask text
/// is flattened to one line; blank subtasks are dropped.
SubtaskPlan embed_subtasks(const Scaffold& scaffold, const std::vector<std::string>& subtasks);

struct StepComment {
  int number = 0;
  std::string text;
};

/// Every `# Step N. text` line (also `Step N:`), in source order.
std::vector<StepComment> parse_step_comments(std::string_view text);

/// All `call_api(api_path="...", params=...)` sites in position order.
/// Occurrences inside strings or comments and `def call_api` are ignored.
/// Throws UnterminatedCall when a call's brackets never close.
std::vector<CallSite> extract_call_sites(std::string_view source);

/// Top-level functions other than the program's main function (the first
/// function invoked from the main guard, or `main_function` when given).
/// api_path is bound from a `# api_path: <path>` marker on the line above
/// the definition, else from the single toolbox template found in the
/// function's string literals.
std::vector<SubFunction> extract_sub_functions(std::string_view source, const Toolbox& toolbox,
                                               std::optional<std::string> main_function = {});

/// Names of all top-level function definitions, in order.
std::vector<std::string> top_level_functions(std::string_view source);

/// Contents of the first fenced code block (preferring one that defines a
/// function), or the text itself when it has no fences.
std::string extract_code_block(std::string_view text);

}  // namespace codetool
