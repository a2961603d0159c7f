#include "codetool/reflection.hpp"

#include <regex>

#include "codetool/code_analysis.hpp"
#include "codetool/prompts.hpp"
#include "codetool/toolbox.hpp"

namespace codetool {

std::vector<std::string> validate_plan(const PseudoProgram& pseudo, const Toolbox& toolbox) {
  std::vector<std::string> invalid;
  for (const auto& site : pseudo.call_sites) {
    if (!toolbox.contains(site.api_path)) invalid.push_back(site.api_path);
  }
  return dedup_first(invalid);
}

PseudoProgram pseudo_from_response(std::string_view response) {
  PseudoProgram pseudo;
  pseudo.source = extract_code_block(response);
  pseudo.call_sites = extract_call_sites(pseudo.source);
  return pseudo;
}

GeneratedProgram program_from_response(std::string_view response, const Toolbox& toolbox) {
  GeneratedProgram program;
  program.source = extract_code_block(response);
  if (top_level_functions(program.source).empty()) {
    throw EmptyProgram("model response defines no function");
  }
  program.sub_functions = extract_sub_functions(program.source, toolbox);
  return program;
}

PseudoProgram reformulate_plan(LlmSession& session, const Task& task, const PseudoProgram& pseudo,
                               const std::vector<std::string>& invalid, const Toolbox& toolbox) {
  if (invalid.empty()) throw ValidationError("reformulation needs at least one invalid path");
  std::string listed;
  for (const auto& path : invalid) listed += "- " + path + "\n";
  const std::string prompt = render_prompt(Stage::reformulate, {{"invalid_tools", listed},
                                                                {"toolbox", render_tool_catalog(toolbox)},
                                                                {"question", task.query},
                                                                {"program", pseudo.source}});
  return pseudo_from_response(session.complete(Stage::reformulate, prompt));
}

GeneratedProgram review_code(LlmSession& session, const Task& task, const ReviewContext& ctx,
                             const Toolbox& toolbox) {
  const std::string prompt = render_prompt(Stage::review, {{"program", ctx.program_source},
                                                           {"traceback", render_traceback(ctx.exception)},
                                                           {"question", task.query}});
  return program_from_response(session.complete(Stage::review, prompt), toolbox);
}

std::string render_traceback(const ExceptionInfo& info) {
  std::string out = "Traceback (most recent call last):\n";
  for (const auto& f : info.frames) {
    out += "  File \"" + f.file + "\", line " + std::to_string(f.line) + ", in " + f.function + "\n";
    if (!f.source_line.empty()) out += "    " + f.source_line + "\n";
  }
  out += info.type_name;
  if (!info.message.empty()) out += ": " + info.message;
  out += "\n";
  return out;
}

ExceptionInfo parse_traceback(std::string_view text) {
  static const std::regex frame_re(R"re(^  File "(.*)", line (\d+), in (.*)$)re");
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.empty() || lines.front() != "Traceback (most recent call last):") {
    throw ParseError("not a traceback");
  }
  ExceptionInfo info;
  std::size_t i = 1;
  for (; i < lines.size(); ++i) {
    std::smatch m;
    if (std::regex_match(lines[i], m, frame_re)) {
      info.frames.push_back({m[1].str(), std::stoi(m[2].str()), m[3].str(), ""});
    } else if (!info.frames.empty() && lines[i].rfind("    ", 0) == 0) {
      info.frames.back().source_line = lines[i].substr(4);
    } else {
      break;
    }
  }
  if (i >= lines.size()) throw ParseError("traceback lacks the exception line");
  std::string last = lines[i];
  for (++i; i < lines.size(); ++i) last += "\n" + lines[i];
  const auto sep = last.find(": ");
  info.type_name = last.substr(0, sep);
  if (sep != std::string::npos) info.message = last.substr(sep + 2);
  return info;
}

ExceptionInfo timeout_exception(int timeout_ms) {
  ExceptionInfo info;
  info.type_name = "TimeoutError";
  info.message = "program did not finish within " + std::to_string(timeout_ms) + " ms";
  return info;
}

}  // namespace codetool
