#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "codetool/executor.hpp"
#include "codetool/function_repo.hpp"
#include "codetool/llm.hpp"
#include "codetool/mock_world.hpp"
#include "codetool/model.hpp"

namespace codetool {

struct PipelineConfig {
  int max_review_rounds = 3;
  int max_reformulations = 2;
  bool use_repository = true;
  bool use_reflection = true;
  bool plan_without_scaffold = false;
  int sandbox_timeout_ms = 60000;
  /// Base URL the codegen prompt names upstream; rewritten to task.base_url
  /// in generated programs and back before harvesting.
  std::string upstream_base_url = "https://api.themoviedb.org";
  /// Bearer token substituted for the key placeholders of generated code.
  std::string api_token;
};

/// Throws ValidationError.
void validate(const PipelineConfig& config);

using ExecuteFn = std::function<ExecutionReport(const GeneratedProgram&, const Task&)>;

/// Executor bound to a runner; BASE_URL and TOOL_API_TOKEN come from the
/// task and the token argument.
ExecuteFn make_executor(RunnerConfig runner, std::string api_token = {});

struct PipelineDeps {
  const Toolbox* toolbox = nullptr;
  LlmSession* session = nullptr;
  FunctionRepository* repository = nullptr;  // may be null
  ExecuteFn execute;
  RequestLogSource* world = nullptr;  // may be null
};

/// One task's run through the stages. Not shareable across threads.
class Pipeline {
 public:
  Pipeline(PipelineDeps deps, PipelineConfig config);

  /// Throws ScaffoldParseError when the response does not parse after one
  /// re-prompt.
  Scaffold task_to_code(const Task& task);

  /// Uses the scaffold source, or the raw query when plan_without_scaffold
  /// is set (the scaffold is still the base the steps are embedded in).
  /// Throws NoSubtasksFound after one re-prompt.
  SubtaskPlan plan_subtasks(const Task& task, const Scaffold& scaffold);

  /// Throws UnresolvableTools when invalid paths survive the reformulation
  /// budget.
  PseudoProgram select_tools(const Task& task, const SubtaskPlan& plan);

  /// Throws EmptyProgram.
  GeneratedProgram generate_program(const Task& task, const PseudoProgram& pseudo);

  /// Never throws for task-level failures; they end up in the trace.
  RunTrace run_task(const Task& task);

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  int reformulation_rounds() const noexcept { return reformulation_rounds_; }

  /// Redirects upstream URLs and key placeholders to the task's world.
  std::string localize(std::string_view source, const Task& task) const;
  /// Inverse of localize, applied before harvesting.
  std::string canonicalize(std::string_view source, const Task& task) const;

 private:
  GeneratedProgram finish_program(GeneratedProgram program, const Task& task) const;

  PipelineDeps deps_;
  PipelineConfig config_;
  std::vector<std::string> warnings_;
  int reformulation_rounds_ = 0;
};

/// Placeholder the generated programs use for the API key.
inline constexpr std::string_view kApiKeySlot = "{API_KEY}";
inline constexpr std::string_view kApiKeyText = "YOUR API KEY";

}  // namespace codetool
