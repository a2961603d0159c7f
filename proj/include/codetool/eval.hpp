#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "codetool/executor.hpp"
#include "codetool/function_repo.hpp"
#include "codetool/llm.hpp"
#include "codetool/model.hpp"
#include "codetool/pipeline.hpp"

namespace codetool {

/// |set(called) ∩ set(ground_truth)| / |set(ground_truth)|.
/// Throws EmptyGroundTruth.
double path_rate(const std::vector<std::string>& called, const std::vector<std::string>& ground_truth);

/// Trim, case-fold and collapse whitespace.
std::string normalize_answer(std::string_view text);

/// Last number in the text, if any ("... Coppola: 8" -> "8").
std::optional<std::string> trailing_number(std::string_view text);

/// 1 when the normalized answers agree (numbers within relative 1e-9),
/// else 0. With `extract_trailing_number`, the final answer is reduced to
/// its last number when the ground truth is numeric.
int accuracy(const std::optional<std::string>& final_answer, const std::string& ground_truth_answer,
             bool extract_trailing_number = false);

struct GroundTruthCall {
  std::string path;
  std::map<std::string, std::string> required_params;

  bool operator==(const GroundTruthCall&) const = default;
};

void to_json(Json& j, const GroundTruthCall& v);
void from_json(const Json& j, GroundTruthCall& v);

/// Fraction of ground-truth calls found in the log with the same path
/// template and every required param equal after trimming.
double correctness(const std::vector<RequestRecord>& log, const std::vector<GroundTruthCall>& ground_truth);

struct CumulativePoint {
  double proportion = 0;
  double cum_success = 0;
  double cum_accuracy = 0;

  bool operator==(const CumulativePoint&) const = default;
};

/// Running means over the first ceil(k*n/10) scenarios for k = 1..10,
/// duplicates of the same prefix length dropped.
std::vector<CumulativePoint> cumulative_series(const std::vector<int>& success, const std::vector<int>& accuracy);

struct Scenario {
  Task task;
  std::filesystem::path transcript_path;
  std::filesystem::path fixture_path;
  std::vector<GroundTruthCall> ground_truth_calls;
};

struct Suite {
  std::vector<Scenario> scenarios;
  bool trailing_number = true;
};

/// Manifest: `{"trailing_number":true,"scenarios":[{"task":{...},
/// "transcript":"...","fixture":"...","ground_truth_calls":[...]}]}`.
/// Relative paths resolve against the manifest's directory. Throws
/// SuiteError when the manifest is malformed or a referenced file is
/// missing.
Suite load_suite(const std::filesystem::path& manifest);

struct ScenarioResult {
  std::size_t index = 0;
  std::string task_id;
  bool success = false;
  std::optional<int> accuracy;
  std::optional<double> path_rate;
  std::optional<double> correctness;
  std::size_t llm_calls = 0;
  int reflection_rounds = 0;
  std::string status;  // last report status, or "error"
  std::optional<std::string> final_answer;
  std::optional<std::string> error;
  RunTrace trace;
};

struct MetricsReport {
  std::string success_definition;
  std::map<std::string, bool> ablations;
  std::size_t scenario_count = 0;
  double success_rate = 0;
  std::optional<double> accuracy;
  std::optional<double> path_rate;
  std::optional<double> correctness;
  double avg_llm_calls = 0;
  std::vector<CumulativePoint> cumulative;
  std::vector<ScenarioResult> results;
};

inline constexpr std::string_view kSuccessDefinition =
    "success = last execution status ok AND answer matches ground truth (replaces human evaluation)";

Json metrics_to_json(const MetricsReport& report, bool include_traces = false);
std::string render_table(const MetricsReport& report);
std::string render_cumulative_csv(const MetricsReport& report);

using ModelFactory = std::function<std::shared_ptr<ModelBackend>(const Scenario&)>;

struct SuiteOptions {
  PipelineConfig pipeline;
  RunnerConfig runner;
  std::size_t workers = 1;
  /// Shared across scenarios; null disables harvesting and reuse.
  FunctionRepository* repository = nullptr;
  /// Defaults to a ScriptedModel over the scenario's transcript.
  ModelFactory model_factory;
};

/// Runs every scenario (each with its own world and session) and folds the
/// results in scenario order. Scenario failures are recorded, never thrown.
/// Throws SuiteError for an empty suite.
MetricsReport run_suite(const Suite& suite, const Toolbox& toolbox, const SuiteOptions& options,
                        LlmGateway& gateway);

}  // namespace codetool
