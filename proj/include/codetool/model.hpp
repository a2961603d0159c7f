#pragma once

// Domain values shared by every stage of the pipeline. Everything here is a
// plain value: constructed, validated, serialized, never mutated in place by
// the library once handed out.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codetool/error.hpp"

namespace codetool {

using Json = nlohmann::json;

/// Milliseconds since the Unix epoch.
using TimestampMs = std::int64_t;

inline constexpr int kFormatVersion = 1;

struct Task {
  std::string id;
  std::string query;
  std::vector<std::string> ground_truth_tools;
  std::optional<std::string> ground_truth_answer;
  std::string base_url;

  bool operator==(const Task&) const = default;
};

struct ToolParameter {
  std::string name;
  std::string type;
  bool required = false;
  std::string description;

  bool operator==(const ToolParameter&) const = default;
};

struct ToolDoc {
  std::string api_path;  // template, e.g. /3/person/{person_id}/movie_credits
  std::string method = "GET";
  std::string description;
  std::vector<ToolParameter> parameters;
  Json response_schema = Json::object();
  std::optional<std::string> reusable_code;

  bool operator==(const ToolDoc&) const = default;
};

/// Tool documentation indexed by exact path template. Keeps file order for
/// prompt rendering.
class Toolbox {
 public:
  Toolbox() = default;
  /// Throws ValidationError on an empty list or an invalid doc and
  /// DuplicatePath when two docs share an api_path.
  explicit Toolbox(std::vector<ToolDoc> tools);

  /// Exact template match; a concretized path never matches its template.
  const ToolDoc* lookup(std::string_view api_path) const;
  bool contains(std::string_view api_path) const { return lookup(api_path) != nullptr; }

  const std::vector<ToolDoc>& tools() const noexcept { return tools_; }
  std::size_t size() const noexcept { return tools_.size(); }
  bool empty() const noexcept { return tools_.empty(); }

  bool operator==(const Toolbox& other) const { return tools_ == other.tools_; }

 private:
  std::vector<ToolDoc> tools_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct ScaffoldParam {
  std::string name;
  std::string annotation;

  bool operator==(const ScaffoldParam&) const = default;
};

struct Scaffold {
  std::string function_name;
  std::vector<ScaffoldParam> params;
  std::string return_annotation;
  std::string docstring;
  std::string body_source;
  std::string main_guard_source;
  std::string raw_source;

  bool operator==(const Scaffold&) const = default;
};

struct SubtaskPlan {
  std::vector<std::string> subtasks;
  std::string annotated_source;

  bool operator==(const SubtaskPlan&) const = default;
};

/// Half-open byte range [start, end) into some source text.
struct ByteSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  bool operator==(const ByteSpan&) const = default;
};

struct CallSite {
  std::string api_path;
  std::string params_literal;
  ByteSpan span;

  bool operator==(const CallSite&) const = default;
};

struct PseudoProgram {
  std::string source;
  std::vector<CallSite> call_sites;

  bool operator==(const PseudoProgram&) const = default;
};

struct SubFunction {
  std::string name;
  std::optional<std::string> api_path;
  ByteSpan span;

  bool operator==(const SubFunction&) const = default;
};

struct GeneratedProgram {
  std::string source;
  std::vector<SubFunction> sub_functions;

  bool operator==(const GeneratedProgram&) const = default;
};

enum class ExecutionStatus { ok, exception, timeout, runner_failure };

struct StackFrame {
  std::string file;
  int line = 1;
  std::string function;
  std::string source_line;

  bool operator==(const StackFrame&) const = default;
};

struct ExceptionInfo {
  std::string type_name;
  std::string message;
  std::vector<StackFrame> frames;  // outermost first

  bool operator==(const ExceptionInfo&) const = default;
};

struct ExecutionReport {
  ExecutionStatus status = ExecutionStatus::ok;
  std::string stdout_text;
  std::optional<std::string> answer;
  std::optional<ExceptionInfo> exception;
  std::int64_t duration_ms = 0;

  bool operator==(const ExecutionReport&) const = default;
};

struct RepoEntry {
  std::string api_path;
  std::string function_name;
  std::string source;
  std::string origin_task_id;
  TimestampMs created_at = 0;

  bool operator==(const RepoEntry&) const = default;
};

enum class Stage { t2c, plan, select, codegen, reformulate, review };

struct LlmCall {
  Stage stage = Stage::t2c;
  std::string prompt;
  std::string response;

  bool operator==(const LlmCall&) const = default;
};

/// One request observed by the mock world.
struct RequestRecord {
  std::string method;
  std::string path;  // matched template, or the raw path when nothing matched
  bool matched = false;
  std::map<std::string, std::string> params;  // query params plus bound path segments
  int status = 0;
  TimestampMs timestamp = 0;

  bool operator==(const RequestRecord&) const = default;
};

struct RunTrace {
  std::string task_id;
  std::vector<LlmCall> llm_calls;
  std::vector<std::string> called_paths;
  std::vector<ExecutionReport> reports;
  int reflection_rounds = 0;
  int reformulation_rounds = 0;
  std::optional<std::string> final_answer;
  std::optional<std::string> error;  // stage failure that ended the run early
  std::vector<std::string> warnings;
  std::vector<RequestRecord> requests;  // world log of the last execution

  bool operator==(const RunTrace&) const = default;
};

// -- helpers ---------------------------------------------------------------

const char* to_string(Stage stage);
Stage stage_from_string(std::string_view text);  // throws ParseError
const char* to_string(ExecutionStatus status);

/// Last non-empty line of captured stdout, trailing whitespace removed.
std::optional<std::string> last_nonempty_line(std::string_view text);

/// Order-preserving deduplication (first occurrence wins).
std::vector<std::string> dedup_first(const std::vector<std::string>& items);

// -- validation (throws ValidationError) -------------------------------------

void validate(const Task& task);
void validate(const ToolDoc& doc);
void validate(const Scaffold& scaffold);
void validate(const SubtaskPlan& plan);
void validate(const CallSite& site);
void validate(const PseudoProgram& program);
void validate(const GeneratedProgram& program);
void validate(const ExecutionReport& report);
void validate(const RepoEntry& entry);
void validate(const RunTrace& trace, int max_review_rounds);

// -- JSON (snake_case field names) -------------------------------------------

void to_json(Json& j, const Task& v);
void from_json(const Json& j, Task& v);
void to_json(Json& j, const ToolParameter& v);
void from_json(const Json& j, ToolParameter& v);
void to_json(Json& j, const ToolDoc& v);
void from_json(const Json& j, ToolDoc& v);
void to_json(Json& j, const Toolbox& v);
void from_json(const Json& j, Toolbox& v);
void to_json(Json& j, const ScaffoldParam& v);
void from_json(const Json& j, ScaffoldParam& v);
void to_json(Json& j, const Scaffold& v);
void from_json(const Json& j, Scaffold& v);
void to_json(Json& j, const SubtaskPlan& v);
void from_json(const Json& j, SubtaskPlan& v);
void to_json(Json& j, const ByteSpan& v);
void from_json(const Json& j, ByteSpan& v);
void to_json(Json& j, const CallSite& v);
void from_json(const Json& j, CallSite& v);
void to_json(Json& j, const PseudoProgram& v);
void from_json(const Json& j, PseudoProgram& v);
void to_json(Json& j, const SubFunction& v);
void from_json(const Json& j, SubFunction& v);
void to_json(Json& j, const GeneratedProgram& v);
void from_json(const Json& j, GeneratedProgram& v);
void to_json(Json& j, const ExecutionStatus& v);
void from_json(const Json& j, ExecutionStatus& v);
void to_json(Json& j, const StackFrame& v);
void from_json(const Json& j, StackFrame& v);
void to_json(Json& j, const ExceptionInfo& v);
void from_json(const Json& j, ExceptionInfo& v);
void to_json(Json& j, const ExecutionReport& v);
void from_json(const Json& j, ExecutionReport& v);
void to_json(Json& j, const RepoEntry& v);
void from_json(const Json& j, RepoEntry& v);
void to_json(Json& j, const Stage& v);
void from_json(const Json& j, Stage& v);
void to_json(Json& j, const LlmCall& v);
void from_json(const Json& j, LlmCall& v);
void to_json(Json& j, const RequestRecord& v);
void from_json(const Json& j, RequestRecord& v);
void to_json(Json& j, const RunTrace& v);
void from_json(const Json& j, RunTrace& v);

}  // namespace codetool
