#include "codetool/model.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

namespace codetool {

const char* to_string(ScaffoldErrorKind kind) {
  switch (kind) {
    case ScaffoldErrorKind::no_function: return "NoFunction";
    case ScaffoldErrorKind::multiple_functions: return "MultipleFunctions";
    case ScaffoldErrorKind::missing_docstring: return "MissingDocstring";
    case ScaffoldErrorKind::non_empty_body: return "NonEmptyBody";
    case ScaffoldErrorKind::missing_main_guard: return "MissingMainGuard";
  }
  return "ScaffoldError";
}

namespace {

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& value) {
  if (value) {
    j[key] = *value;
  } else {
    j[key] = nullptr;
  }
}

template <typename T>
void get_optional(const Json& j, const char* key, std::optional<T>& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    out.reset();
  } else {
    out = it->template get<T>();
  }
}

template <typename T>
void get_or(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    out = it->template get<T>();
  }
}

std::string trim_copy(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

// -- Toolbox -----------------------------------------------------------------

Toolbox::Toolbox(std::vector<ToolDoc> tools) : tools_(std::move(tools)) {
  if (tools_.empty()) {
    throw ValidationError("toolbox must contain at least one tool");
  }
  for (std::size_t i = 0; i < tools_.size(); ++i) {
    validate(tools_[i]);
    auto [it, inserted] = index_.emplace(tools_[i].api_path, i);
    if (!inserted) {
      throw DuplicatePath("duplicate api_path in toolbox: " + tools_[i].api_path);
    }
  }
}

const ToolDoc* Toolbox::lookup(std::string_view api_path) const {
  auto it = index_.find(api_path);
  return it == index_.end() ? nullptr : &tools_[it->second];
}

// -- helpers -----------------------------------------------------------------

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::t2c: return "t2c";
    case Stage::plan: return "plan";
    case Stage::select: return "select";
    case Stage::codegen: return "codegen";
    case Stage::reformulate: return "reformulate";
    case Stage::review: return "review";
  }
  return "?";
}

Stage stage_from_string(std::string_view text) {
  for (Stage s : {Stage::t2c, Stage::plan, Stage::select, Stage::codegen, Stage::reformulate,
                  Stage::review}) {
    if (text == to_string(s)) return s;
  }
  throw ParseError("unknown stage tag: " + std::string(text));
}

const char* to_string(ExecutionStatus status) {
  switch (status) {
    case ExecutionStatus::ok: return "ok";
    case ExecutionStatus::exception: return "exception";
    case ExecutionStatus::timeout: return "timeout";
    case ExecutionStatus::runner_failure: return "runner_failure";
  }
  return "?";
}

std::optional<std::string> last_nonempty_line(std::string_view text) {
  std::optional<std::string> last;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    auto trimmed = trim_copy(line);
    if (!trimmed.empty()) {
      // keep leading whitespace out, trailing too; interior untouched
      last = std::move(trimmed);
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return last;
}

std::vector<std::string> dedup_first(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (seen.insert(item).second) out.push_back(item);
  }
  return out;
}

// -- validation --------------------------------------------------------------

void validate(const Task& task) {
  if (trim_copy(task.query).empty()) throw ValidationError("task query is empty");
  std::set<std::string> seen;
  for (const auto& path : task.ground_truth_tools) {
    if (!seen.insert(path).second) {
      throw ValidationError("duplicate ground-truth tool: " + path);
    }
  }
}

void validate(const ToolDoc& doc) {
  if (doc.api_path.empty() || doc.api_path.front() != '/') {
    throw ValidationError("api_path must start with '/': '" + doc.api_path + "'");
  }
  std::set<std::string> names;
  for (const auto& p : doc.parameters) {
    if (p.name.empty()) throw ValidationError("empty parameter name in " + doc.api_path);
    if (!names.insert(p.name).second) {
      throw ValidationError("duplicate parameter '" + p.name + "' in " + doc.api_path);
    }
  }
  if (doc.reusable_code && doc.reusable_code->empty()) {
    throw ValidationError("reusable_code present but empty for " + doc.api_path);
  }
}

void validate(const Scaffold& s) {
  static const std::regex identifier(R"([A-Za-z_][A-Za-z0-9_]*)");
  if (!std::regex_match(s.function_name, identifier)) {
    throw ValidationError("invalid function name: " + s.function_name);
  }
  std::istringstream body(s.body_source);
  for (std::string line; std::getline(body, line);) {
    auto t = trim_copy(line);
    if (t.empty() || t.front() == '#' || t == "pass" || t == "...") continue;
    throw ValidationError("scaffold body has an executable statement: " + t);
  }
  for (const auto& p : s.params) {
    std::string bare = p.name;
    bare.erase(0, bare.find_first_not_of('*'));
    if (s.docstring.find(bare) == std::string::npos) {
      throw ValidationError("docstring does not mention parameter " + bare);
    }
  }
  const std::regex call("\\b" + s.function_name + "\\s*\\(");
  if (!std::regex_search(s.main_guard_source, call)) {
    throw ValidationError("main guard does not invoke " + s.function_name);
  }
}

void validate(const SubtaskPlan& plan) {
  if (plan.subtasks.empty()) throw ValidationError("plan has no subtasks");
  std::size_t pos = 0;
  for (const auto& sub : plan.subtasks) {
    auto at = plan.annotated_source.find(sub, pos);
    if (at == std::string::npos) {
      throw ValidationError("subtask missing from annotated source: " + sub);
    }
    auto line_start = plan.annotated_source.rfind('\n', at);
    line_start = line_start == std::string::npos ? 0 : line_start + 1;
    auto prefix = trim_copy(std::string_view(plan.annotated_source).substr(line_start, at - line_start));
    if (prefix.empty() || prefix.front() != '#') {
      throw ValidationError("subtask is not embedded as a comment: " + sub);
    }
    pos = at + sub.size();
  }
}

void validate(const CallSite& site) {
  if (site.api_path.empty()) throw ValidationError("call site has empty api_path");
  if (site.span.start >= site.span.end) throw ValidationError("call site has empty span");
}

void validate(const PseudoProgram& program) {
  std::size_t last_start = 0;
  for (const auto& site : program.call_sites) {
    validate(site);
    if (site.span.end > program.source.size()) {
      throw ValidationError("call site span outside source");
    }
    if (site.span.start < last_start) throw ValidationError("call sites out of order");
    last_start = site.span.start;
  }
}

void validate(const GeneratedProgram& program) {
  std::vector<ByteSpan> spans;
  for (const auto& f : program.sub_functions) {
    if (f.span.start >= f.span.end || f.span.end > program.source.size()) {
      throw ValidationError("sub-function span outside source: " + f.name);
    }
    spans.push_back(f.span);
  }
  std::sort(spans.begin(), spans.end(),
            [](const ByteSpan& a, const ByteSpan& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start < spans[i - 1].end) throw ValidationError("sub-function spans overlap");
  }
}

void validate(const ExecutionReport& report) {
  if (report.duration_ms < 0) throw ValidationError("negative duration");
  if (report.status == ExecutionStatus::ok && report.exception) {
    throw ValidationError("ok report carries an exception");
  }
  if (report.status == ExecutionStatus::exception) {
    if (!report.exception) throw ValidationError("exception report without exception info");
    if (report.exception->frames.empty()) {
      throw ValidationError("exception report without frames");
    }
  }
  if (report.exception) {
    for (const auto& f : report.exception->frames) {
      if (f.line < 1) throw ValidationError("frame line number below 1");
    }
  }
}

void validate(const RepoEntry& entry) {
  if (entry.api_path.empty() || entry.api_path.front() != '/') {
    throw ValidationError("repo entry api_path must start with '/'");
  }
  if (entry.function_name.empty()) throw ValidationError("repo entry without function name");
  static const std::regex top_def(R"((^|\n)(async\s+)?def\s+[A-Za-z_])");
  auto begin = std::sregex_iterator(entry.source.begin(), entry.source.end(), top_def);
  if (std::distance(begin, std::sregex_iterator()) != 1) {
    throw ValidationError("repo entry source must define exactly one function");
  }
}

void validate(const RunTrace& trace, int max_review_rounds) {
  if (trace.reflection_rounds < 0 || trace.reflection_rounds > max_review_rounds) {
    throw ValidationError("reflection_rounds outside [0, cap]");
  }
  if (dedup_first(trace.called_paths) != trace.called_paths) {
    throw ValidationError("called_paths contains duplicates");
  }
}

// -- JSON --------------------------------------------------------------------

void to_json(Json& j, const Task& v) {
  j = Json{{"id", v.id},
           {"query", v.query},
           {"ground_truth_tools", v.ground_truth_tools},
           {"base_url", v.base_url}};
  put_optional(j, "ground_truth_answer", v.ground_truth_answer);
}

void from_json(const Json& j, Task& v) {
  v.id = j.value("id", std::string{});
  v.query = j.at("query").get<std::string>();
  v.ground_truth_tools.clear();
  get_or(j, "ground_truth_tools", v.ground_truth_tools);
  get_optional(j, "ground_truth_answer", v.ground_truth_answer);
  v.base_url = j.value("base_url", std::string{});
}

void to_json(Json& j, const ToolParameter& v) {
  j = Json{{"name", v.name}, {"type", v.type}, {"required", v.required},
           {"description", v.description}};
}

void from_json(const Json& j, ToolParameter& v) {
  v.name = j.at("name").get<std::string>();
  v.type = j.value("type", std::string("string"));
  v.required = j.value("required", false);
  v.description = j.value("description", std::string{});
}

void to_json(Json& j, const ToolDoc& v) {
  j = Json{{"api_path", v.api_path},         {"method", v.method},
           {"description", v.description},   {"parameters", v.parameters},
           {"response_schema", v.response_schema}};
  if (v.reusable_code) j["reusable_code"] = *v.reusable_code;
}

void from_json(const Json& j, ToolDoc& v) {
  v.api_path = j.at("api_path").get<std::string>();
  v.method = j.value("method", std::string("GET"));
  v.description = j.value("description", std::string{});
  v.parameters.clear();
  get_or(j, "parameters", v.parameters);
  v.response_schema = j.value("response_schema", Json::object());
  get_optional(j, "reusable_code", v.reusable_code);
}

void to_json(Json& j, const Toolbox& v) {
  j = Json{{"format_version", kFormatVersion}, {"tools", v.tools()}};
}

void from_json(const Json& j, Toolbox& v) {
  v = Toolbox(j.at("tools").get<std::vector<ToolDoc>>());
}

void to_json(Json& j, const ScaffoldParam& v) {
  j = Json{{"name", v.name}, {"annotation", v.annotation}};
}

void from_json(const Json& j, ScaffoldParam& v) {
  v.name = j.at("name").get<std::string>();
  v.annotation = j.value("annotation", std::string{});
}

void to_json(Json& j, const Scaffold& v) {
  j = Json{{"function_name", v.function_name},
           {"params", v.params},
           {"return_annotation", v.return_annotation},
           {"docstring", v.docstring},
           {"body_source", v.body_source},
           {"main_guard_source", v.main_guard_source},
           {"raw_source", v.raw_source}};
}

void from_json(const Json& j, Scaffold& v) {
  v.function_name = j.at("function_name").get<std::string>();
  v.params = j.at("params").get<std::vector<ScaffoldParam>>();
  v.return_annotation = j.at("return_annotation").get<std::string>();
  v.docstring = j.at("docstring").get<std::string>();
  v.body_source = j.at("body_source").get<std::string>();
  v.main_guard_source = j.at("main_guard_source").get<std::string>();
  v.raw_source = j.at("raw_source").get<std::string>();
}

void to_json(Json& j, const SubtaskPlan& v) {
  j = Json{{"subtasks", v.subtasks}, {"annotated_source", v.annotated_source}};
}

void from_json(const Json& j, SubtaskPlan& v) {
  v.subtasks = j.at("subtasks").get<std::vector<std::string>>();
  v.annotated_source = j.at("annotated_source").get<std::string>();
}

void to_json(Json& j, const ByteSpan& v) { j = Json::array({v.start, v.end}); }

void from_json(const Json& j, ByteSpan& v) {
  v.start = j.at(0).get<std::size_t>();
  v.end = j.at(1).get<std::size_t>();
}

void to_json(Json& j, const CallSite& v) {
  j = Json{{"api_path", v.api_path}, {"params_literal", v.params_literal}, {"byte_span", v.span}};
}

void from_json(const Json& j, CallSite& v) {
  v.api_path = j.at("api_path").get<std::string>();
  v.params_literal = j.at("params_literal").get<std::string>();
  v.span = j.at("byte_span").get<ByteSpan>();
}

void to_json(Json& j, const PseudoProgram& v) {
  j = Json{{"source", v.source}, {"call_sites", v.call_sites}};
}

void from_json(const Json& j, PseudoProgram& v) {
  v.source = j.at("source").get<std::string>();
  v.call_sites = j.at("call_sites").get<std::vector<CallSite>>();
}

void to_json(Json& j, const SubFunction& v) {
  j = Json{{"name", v.name}, {"span", v.span}};
  put_optional(j, "api_path", v.api_path);
}

void from_json(const Json& j, SubFunction& v) {
  v.name = j.at("name").get<std::string>();
  get_optional(j, "api_path", v.api_path);
  v.span = j.at("span").get<ByteSpan>();
}

void to_json(Json& j, const GeneratedProgram& v) {
  j = Json{{"source", v.source}, {"sub_functions", v.sub_functions}};
}

void from_json(const Json& j, GeneratedProgram& v) {
  v.source = j.at("source").get<std::string>();
  v.sub_functions = j.at("sub_functions").get<std::vector<SubFunction>>();
}

void to_json(Json& j, const ExecutionStatus& v) { j = to_string(v); }

void from_json(const Json& j, ExecutionStatus& v) {
  const auto text = j.get<std::string>();
  for (auto s : {ExecutionStatus::ok, ExecutionStatus::exception, ExecutionStatus::timeout,
                 ExecutionStatus::runner_failure}) {
    if (text == to_string(s)) {
      v = s;
      return;
    }
  }
  throw ParseError("unknown execution status: " + text);
}

void to_json(Json& j, const StackFrame& v) {
  j = Json{{"file", v.file}, {"line", v.line}, {"func", v.function}, {"code", v.source_line}};
}

void from_json(const Json& j, StackFrame& v) {
  v.file = j.value("file", std::string{});
  v.line = j.at("line").get<int>();
  v.function = j.value("func", std::string{});
  v.source_line = j.value("code", std::string{});
}

void to_json(Json& j, const ExceptionInfo& v) {
  j = Json{{"type", v.type_name}, {"message", v.message}, {"frames", v.frames}};
}

void from_json(const Json& j, ExceptionInfo& v) {
  v.type_name = j.at("type").get<std::string>();
  v.message = j.value("message", std::string{});
  v.frames.clear();
  get_or(j, "frames", v.frames);
}

void to_json(Json& j, const ExecutionReport& v) {
  j = Json{{"status", v.status}, {"stdout", v.stdout_text}, {"duration_ms", v.duration_ms}};
  put_optional(j, "answer", v.answer);
  put_optional(j, "exception", v.exception);
}

void from_json(const Json& j, ExecutionReport& v) {
  v.status = j.at("status").get<ExecutionStatus>();
  v.stdout_text = j.value("stdout", std::string{});
  get_optional(j, "answer", v.answer);
  get_optional(j, "exception", v.exception);
  v.duration_ms = j.value("duration_ms", std::int64_t{0});
}

void to_json(Json& j, const RepoEntry& v) {
  j = Json{{"api_path", v.api_path},
           {"function_name", v.function_name},
           {"source", v.source},
           {"origin_task_id", v.origin_task_id},
           {"created_at", v.created_at}};
}

void from_json(const Json& j, RepoEntry& v) {
  v.api_path = j.at("api_path").get<std::string>();
  v.function_name = j.at("function_name").get<std::string>();
  v.source = j.at("source").get<std::string>();
  v.origin_task_id = j.at("origin_task_id").get<std::string>();
  v.created_at = j.at("created_at").get<TimestampMs>();
}

void to_json(Json& j, const Stage& v) { j = to_string(v); }

void from_json(const Json& j, Stage& v) { v = stage_from_string(j.get<std::string>()); }

void to_json(Json& j, const LlmCall& v) {
  j = Json{{"stage", v.stage}, {"prompt", v.prompt}, {"response", v.response}};
}

void from_json(const Json& j, LlmCall& v) {
  v.stage = j.at("stage").get<Stage>();
  v.prompt = j.at("prompt").get<std::string>();
  v.response = j.at("response").get<std::string>();
}

void to_json(Json& j, const RequestRecord& v) {
  j = Json{{"method", v.method}, {"path", v.path},     {"matched", v.matched},
           {"params", v.params}, {"status", v.status}, {"timestamp", v.timestamp}};
}

void from_json(const Json& j, RequestRecord& v) {
  v.method = j.value("method", std::string("GET"));
  v.path = j.at("path").get<std::string>();
  v.matched = j.value("matched", false);
  v.params.clear();
  get_or(j, "params", v.params);
  v.status = j.value("status", 0);
  v.timestamp = j.value("timestamp", TimestampMs{0});
}

void to_json(Json& j, const RunTrace& v) {
  j = Json{{"format_version", kFormatVersion},
           {"task_id", v.task_id},
           {"llm_calls", v.llm_calls},
           {"called_paths", v.called_paths},
           {"reports", v.reports},
           {"reflection_rounds", v.reflection_rounds},
           {"reformulation_rounds", v.reformulation_rounds},
           {"warnings", v.warnings},
           {"requests", v.requests}};
  put_optional(j, "final_answer", v.final_answer);
  put_optional(j, "error", v.error);
}

void from_json(const Json& j, RunTrace& v) {
  v.task_id = j.at("task_id").get<std::string>();
  v.llm_calls = j.at("llm_calls").get<std::vector<LlmCall>>();
  v.called_paths = j.at("called_paths").get<std::vector<std::string>>();
  v.reports = j.at("reports").get<std::vector<ExecutionReport>>();
  v.reflection_rounds = j.at("reflection_rounds").get<int>();
  v.reformulation_rounds = j.value("reformulation_rounds", 0);
  v.warnings.clear();
  get_or(j, "warnings", v.warnings);
  v.requests.clear();
  get_or(j, "requests", v.requests);
  get_optional(j, "final_answer", v.final_answer);
  get_optional(j, "error", v.error);
}

}  // namespace codetool
