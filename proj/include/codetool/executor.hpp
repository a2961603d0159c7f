#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "codetool/model.hpp"

namespace codetool {

struct RunnerConfig {
  /// argv template; `{program}` is replaced by the program file path, or
  /// the path is appended when no element mentions the slot.
  std::vector<std::string> command;
  int timeout_ms = 60000;
  /// Added to (and overriding) the parent environment.
  std::map<std::string, std::string> env;
  /// Parent of the per-run work directories; empty means the system temp dir.
  std::filesystem::path work_root;
};

inline constexpr std::string_view kBaseUrlEnv = "BASE_URL";
inline constexpr std::string_view kApiTokenEnv = "TOOL_API_TOKEN";
inline constexpr std::string_view kProgramFileName = "program.py";

/// Runs the program through the runner and maps its result document onto a
/// report. Never throws for guest or runner misbehaviour: a runner that
/// exits nonzero without a document, or prints a malformed one, yields
/// status runner_failure with exception type "RunnerFailure". Throws
/// ValidationError for an empty program or invalid config.
ExecutionReport execute(const GeneratedProgram& program, const RunnerConfig& cfg);

/// Parses one result document. Frame files equal to `program_path` are
/// reported as program.py. Throws ParseError.
ExecutionReport parse_result_document(std::string_view text, std::string_view program_path = {});

/// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command(std::string_view command);

}  // namespace codetool
