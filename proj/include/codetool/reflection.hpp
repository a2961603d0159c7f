#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "codetool/llm.hpp"
#include "codetool/model.hpp"

namespace codetool {

struct ReviewContext {
  std::string program_source;
  ExceptionInfo exception;
  int round = 1;
};

/// Call-site paths without an exact toolbox match, first occurrence order.
std::vector<std::string> validate_plan(const PseudoProgram& pseudo, const Toolbox& toolbox);

/// One reformulate-stage call listing the invalid paths; the response is the
/// corrected pseudo-code, re-extracted. The result may still be invalid.
PseudoProgram reformulate_plan(LlmSession& session, const Task& task, const PseudoProgram& pseudo,
                               const std::vector<std::string>& invalid, const Toolbox& toolbox);

/// One review-stage call with the whole program and its traceback. The
/// response replaces the program. Throws EmptyProgram when it defines no
/// function.
GeneratedProgram review_code(LlmSession& session, const Task& task, const ReviewContext& ctx,
                             const Toolbox& toolbox);

/// Python-style traceback text, outermost frame first.
std::string render_traceback(const ExceptionInfo& info);

/// Inverse of render_traceback. Throws ParseError.
ExceptionInfo parse_traceback(std::string_view text);

/// Exception standing in for a timeout when it is reviewed.
ExceptionInfo timeout_exception(int timeout_ms);

/// Builds a GeneratedProgram from model output: strips a code fence and
/// extracts sub-functions. Throws EmptyProgram.
GeneratedProgram program_from_response(std::string_view response, const Toolbox& toolbox);

/// Pseudo-code from model output (fence stripped, call sites extracted).
PseudoProgram pseudo_from_response(std::string_view response);

}  // namespace codetool
