#include "codetool/pipeline.hpp"

#include <algorithm>

#include "codetool/code_analysis.hpp"
#include "codetool/prompts.hpp"
#include "codetool/reflection.hpp"
#include "codetool/toolbox.hpp"

namespace codetool {

namespace {

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  if (from.empty()) return;
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

std::string error_label(const std::exception& e) {
  if (dynamic_cast<const ScaffoldParseError*>(&e)) return "ScaffoldParseError";
  if (dynamic_cast<const NoSubtasksFound*>(&e)) return "NoSubtasksFound";
  if (dynamic_cast<const UnresolvableTools*>(&e)) return "UnresolvableTools";
  if (dynamic_cast<const EmptyProgram*>(&e)) return "EmptyProgram";
  if (dynamic_cast<const UnterminatedCall*>(&e)) return "UnterminatedCall";
  if (dynamic_cast<const TranscriptExhausted*>(&e)) return "TranscriptExhausted";
  if (dynamic_cast<const TranscriptMismatch*>(&e)) return "TranscriptMismatch";
  if (dynamic_cast<const ProviderError*>(&e)) return "ProviderError";
  if (dynamic_cast<const ValidationError*>(&e)) return "ValidationError";
  if (dynamic_cast<const StorageError*>(&e)) return "StorageError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

const char* kRetryNote = "\n\nYour previous answer could not be used: ";

}  // namespace

void validate(const PipelineConfig& config) {
  if (config.max_review_rounds < 0) throw ValidationError("max_review_rounds must be >= 0");
  if (config.max_reformulations < 0) throw ValidationError("max_reformulations must be >= 0");
  if (config.sandbox_timeout_ms <= 0) throw ValidationError("sandbox_timeout_ms must be positive");
}

ExecuteFn make_executor(RunnerConfig runner, std::string api_token) {
  return [runner = std::move(runner), token = std::move(api_token)](const GeneratedProgram& program,
                                                                    const Task& task) {
    RunnerConfig cfg = runner;
    if (!task.base_url.empty()) cfg.env[std::string(kBaseUrlEnv)] = task.base_url;
    if (!token.empty()) cfg.env[std::string(kApiTokenEnv)] = token;
    return execute(program, cfg);
  };
}

Pipeline::Pipeline(PipelineDeps deps, PipelineConfig config) : deps_(std::move(deps)), config_(std::move(config)) {
  validate(config_);
  if (deps_.toolbox == nullptr || deps_.toolbox->empty()) throw ValidationError("pipeline needs a toolbox");
  if (deps_.session == nullptr) throw ValidationError("pipeline needs an LLM session");
}

Scaffold Pipeline::task_to_code(const Task& task) {
  if (task.query.empty()) throw ValidationError("task query is empty");
  const std::string prompt = render_prompt(Stage::t2c, {{"question", task.query}});
  std::string response = deps_.session->complete(Stage::t2c, prompt);
  try {
    return parse_scaffold(extract_code_block(response));
  } catch (const ScaffoldError& first) {
    response = deps_.session->complete(Stage::t2c, prompt + kRetryNote + first.what());
    try {
      return parse_scaffold(extract_code_block(response));
    } catch (const ScaffoldError& second) {
      throw ScaffoldParseError(second.what());
    }
  }
}

SubtaskPlan Pipeline::plan_subtasks(const Task& task, const Scaffold& scaffold) {
  const std::string prompt = render_prompt(
      Stage::plan, {{"toolbox", render_tool_index(*deps_.toolbox)},
                    {"question", task.query},
                    {"pseudo_code_task", config_.plan_without_scaffold ? task.query : scaffold.raw_source}});
  auto steps = parse_step_comments(deps_.session->complete(Stage::plan, prompt));
  if (steps.empty()) {
    steps = parse_step_comments(deps_.session->complete(
        Stage::plan, prompt + kRetryNote + "it contains no '# Step N.' comments."));
    if (steps.empty()) throw NoSubtasksFound("plan response contains no step comments");
  }
  bool strictly_increasing = true;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i].number <= steps[i - 1].number) strictly_increasing = false;
  }
  if (!strictly_increasing) {
    std::stable_sort(steps.begin(), steps.end(), [](const auto& a, const auto& b) { return a.number < b.number; });
    warnings_.push_back("plan steps were not numbered in order; reordered by step number");
  }
  std::vector<std::string> subtasks;
  for (auto& s : steps) subtasks.push_back(std::move(s.text));
  return embed_subtasks(scaffold, subtasks);
}

PseudoProgram Pipeline::select_tools(const Task& task, const SubtaskPlan& plan) {
  const std::string prompt = render_prompt(Stage::select, {{"toolbox", render_tool_catalog(*deps_.toolbox)},
                                                           {"question", task.query},
                                                           {"pseudo_code_task", plan.annotated_source}});
  PseudoProgram pseudo = pseudo_from_response(deps_.session->complete(Stage::select, prompt));
  auto invalid = validate_plan(pseudo, *deps_.toolbox);
  const int budget = config_.use_reflection ? config_.max_reformulations : 0;
  while (!invalid.empty()) {
    if (reformulation_rounds_ >= budget) {
      std::string listed;
      for (const auto& p : invalid) listed += (listed.empty() ? "" : ", ") + p;
      throw UnresolvableTools("invalid tool paths after " + std::to_string(reformulation_rounds_) +
                              " reformulation(s): " + listed);
    }
    pseudo = reformulate_plan(*deps_.session, task, pseudo, invalid, *deps_.toolbox);
    ++reformulation_rounds_;
    invalid = validate_plan(pseudo, *deps_.toolbox);
  }
  return pseudo;
}

GeneratedProgram Pipeline::generate_program(const Task& task, const PseudoProgram& pseudo) {
  std::vector<std::string> paths;
  for (const auto& site : pseudo.call_sites) paths.push_back(site.api_path);
  std::vector<ToolDoc> docs;
  for (const auto& path : dedup_first(paths)) {
    if (const ToolDoc* doc = deps_.toolbox->lookup(path)) docs.push_back(*doc);
  }
  if (config_.use_repository && deps_.repository != nullptr) {
    docs = augment_with_repo(docs, *deps_.repository);
  } else {
    for (auto& doc : docs) doc.reusable_code.reset();
  }
  const std::string prompt = render_prompt(Stage::codegen, {{"question", task.query},
                                                            {"code_solution", pseudo.source},
                                                            {"api_doc", render_api_docs(docs)},
                                                            {"base_url", config_.upstream_base_url}});
  return finish_program(program_from_response(deps_.session->complete(Stage::codegen, prompt), *deps_.toolbox),
                        task);
}

std::string Pipeline::localize(std::string_view source, const Task& task) const {
  std::string out(source);
  if (!task.base_url.empty()) replace_all(out, config_.upstream_base_url, task.base_url);
  if (!config_.api_token.empty()) {
    replace_all(out, kApiKeyText, "Bearer " + config_.api_token);
    replace_all(out, kApiKeySlot, config_.api_token);
  }
  return out;
}

std::string Pipeline::canonicalize(std::string_view source, const Task& task) const {
  std::string out(source);
  if (!task.base_url.empty()) replace_all(out, task.base_url, config_.upstream_base_url);
  if (!config_.api_token.empty()) replace_all(out, config_.api_token, kApiKeySlot);
  return out;
}

GeneratedProgram Pipeline::finish_program(GeneratedProgram program, const Task& task) const {
  program.source = localize(program.source, task);
  program.sub_functions = extract_sub_functions(program.source, *deps_.toolbox);
  return program;
}

RunTrace Pipeline::run_task(const Task& task) {
  RunTrace trace;
  trace.task_id = task.id;
  warnings_.clear();
  reformulation_rounds_ = 0;
  const std::size_t first_call = deps_.session->calls().size();
  PseudoProgram pseudo;

  try {
    validate(task);
    if (!deps_.execute) throw ValidationError("pipeline has no executor");
    const Scaffold scaffold = task_to_code(task);
    const SubtaskPlan plan = plan_subtasks(task, scaffold);
    pseudo = select_tools(task, plan);
    GeneratedProgram program = generate_program(task, pseudo);

    while (true) {
      if (deps_.world != nullptr) deps_.world->drain_log();
      ExecutionReport report = deps_.execute(program, task);
      trace.requests = deps_.world != nullptr ? deps_.world->drain_log() : std::vector<RequestRecord>{};
      trace.reports.push_back(report);

      if (report.status == ExecutionStatus::ok) {
        trace.final_answer = report.answer;
        if (config_.use_repository && deps_.repository != nullptr) {
          GeneratedProgram canonical;
          canonical.source = canonicalize(program.source, task);
          canonical.sub_functions = extract_sub_functions(canonical.source, *deps_.toolbox);
          try {
            deps_.repository->harvest(canonical, report, task.id);
          } catch (const StorageError& e) {
            warnings_.push_back(std::string("repository harvest failed: ") + e.what());
          }
        }
        break;
      }
      if (report.status == ExecutionStatus::runner_failure) break;
      if (!config_.use_reflection || trace.reflection_rounds >= config_.max_review_rounds) break;

      ReviewContext ctx;
      ctx.program_source = program.source;
      ctx.exception = report.status == ExecutionStatus::timeout ? timeout_exception(config_.sandbox_timeout_ms)
                                                                : *report.exception;
      ctx.round = trace.reflection_rounds + 1;
      program = finish_program(review_code(*deps_.session, task, ctx, *deps_.toolbox), task);
      ++trace.reflection_rounds;
    }
  } catch (const std::exception& e) {
    trace.error = error_label(e) + ": " + e.what();
  }

  if (deps_.world != nullptr) {
    for (const auto& r : trace.requests) trace.called_paths.push_back(r.path);
  } else {
    for (const auto& site : pseudo.call_sites) trace.called_paths.push_back(site.api_path);
  }
  trace.called_paths = dedup_first(trace.called_paths);
  const auto& calls = deps_.session->calls();
  trace.llm_calls.assign(calls.begin() + static_cast<std::ptrdiff_t>(first_call), calls.end());
  trace.reformulation_rounds = reformulation_rounds_;
  trace.warnings = warnings_;
  return trace;
}

}  // namespace codetool
