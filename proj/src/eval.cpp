#include "codetool/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include "codetool/mock_world.hpp"

namespace codetool {

namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<double> as_number(const std::string& text) {
  static const std::regex number(R"([-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?)");
  if (!std::regex_match(text, number)) return std::nullopt;
  return std::strtod(text.c_str(), nullptr);
}

double mean(const std::vector<double>& xs) {
  double sum = 0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

}  // namespace

double path_rate(const std::vector<std::string>& called, const std::vector<std::string>& ground_truth) {
  if (ground_truth.empty()) throw EmptyGroundTruth("path_rate needs ground-truth tools");
  const std::set<std::string> truth(ground_truth.begin(), ground_truth.end());
  const std::set<std::string> seen(called.begin(), called.end());
  std::size_t hit = 0;
  for (const auto& t : truth) hit += seen.count(t);
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : trim(text)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::optional<std::string> trailing_number(std::string_view text) {
  static const std::regex number(R"([-+]?(\d+(\.\d+)?|\.\d+)([eE][-+]?\d+)?)");
  const std::string s(text);
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number); it != std::sregex_iterator(); ++it) {
    last = it->str();
  }
  return last;
}

int accuracy(const std::optional<std::string>& final_answer, const std::string& ground_truth_answer,
             bool extract_trailing_number) {
  if (!final_answer) return 0;
  const std::string truth = normalize_answer(ground_truth_answer);
  std::string answer = normalize_answer(*final_answer);
  const auto truth_num = as_number(truth);
  if (extract_trailing_number && truth_num) {
    if (auto n = trailing_number(answer)) answer = *n;
  }
  const auto answer_num = as_number(answer);
  if (truth_num && answer_num) {
    const double a = *answer_num;
    const double b = *truth_num;
    if (a == b) return 1;
    return std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b)) ? 1 : 0;
  }
  return answer == truth ? 1 : 0;
}

void to_json(Json& j, const GroundTruthCall& v) {
  j = Json{{"path", v.path}, {"required_params", v.required_params}};
}

void from_json(const Json& j, GroundTruthCall& v) {
  j.at("path").get_to(v.path);
  v.required_params.clear();
  if (j.contains("required_params")) {
    for (const auto& [k, val] : j["required_params"].items()) {
      v.required_params[k] = val.is_string() ? val.get<std::string>() : val.dump();
    }
  }
}

double correctness(const std::vector<RequestRecord>& log, const std::vector<GroundTruthCall>& ground_truth) {
  if (ground_truth.empty()) throw EmptyGroundTruth("correctness needs ground-truth calls");
  std::size_t hit = 0;
  for (const auto& call : ground_truth) {
    const bool found = std::any_of(log.begin(), log.end(), [&](const RequestRecord& r) {
      if (r.path != call.path) return false;
      for (const auto& [k, v] : call.required_params) {
        auto it = r.params.find(k);
        if (it == r.params.end() || trim(it->second) != trim(v)) return false;
      }
      return true;
    });
    hit += found ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(ground_truth.size());
}

std::vector<CumulativePoint> cumulative_series(const std::vector<int>& success, const std::vector<int>& acc) {
  if (success.size() != acc.size()) throw ValidationError("indicator series differ in length");
  const std::size_t n = success.size();
  std::vector<CumulativePoint> out;
  std::size_t prev = 0;
  for (std::size_t k = 1; k <= 10 && n > 0; ++k) {
    const std::size_t len = (k * n + 9) / 10;
    if (len == prev) continue;
    prev = len;
    double s = 0;
    double a = 0;
    for (std::size_t i = 0; i < len; ++i) {
      s += success[i];
      a += acc[i];
    }
    const double d = static_cast<double>(len);
    out.push_back({d / static_cast<double>(n), s / d, a / d});
  }
  return out;
}

Suite load_suite(const std::filesystem::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw SuiteError("cannot read suite manifest " + manifest.string());
  const auto base = manifest.parent_path();
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  Suite suite;
  try {
    const Json doc = Json::parse(in);
    const Json& list = doc.is_array() ? doc : doc.at("scenarios");
    if (doc.is_object()) suite.trailing_number = doc.value("trailing_number", true);
    for (const Json& item : list) {
      Scenario s;
      s.task = item.at("task").get<Task>();
      s.transcript_path = resolve(item.value("transcript", ""));
      s.fixture_path = resolve(item.value("fixture", ""));
      s.ground_truth_calls = item.value("ground_truth_calls", std::vector<GroundTruthCall>{});
      suite.scenarios.push_back(std::move(s));
    }
  } catch (const Json::exception& e) {
    throw SuiteError(std::string("malformed suite manifest: ") + e.what());
  } catch (const ValidationError& e) {
    throw SuiteError(std::string("invalid task in suite: ") + e.what());
  }
  for (const auto& s : suite.scenarios) {
    for (const auto& p : {s.transcript_path, s.fixture_path}) {
      if (!p.empty() && !std::filesystem::exists(p)) {
        throw SuiteError("scenario " + s.task.id + " references missing file " + p.string());
      }
    }
  }
  return suite;
}

namespace {

ScenarioResult run_one(const Scenario& scenario, std::size_t index, const Toolbox& toolbox,
                       const SuiteOptions& options, bool trailing, LlmGateway& gateway) {
  ScenarioResult result;
  result.index = index;
  result.task_id = scenario.task.id;
  Task task = scenario.task;
  const std::string key = std::to_string(index) + ":" + task.id;
  gateway.register_task(key);
  try {
    std::unique_ptr<MockWorld> world;
    PipelineConfig config = options.pipeline;
    if (!scenario.fixture_path.empty()) {
      auto fixture = load_fixture(scenario.fixture_path);
      if (config.api_token.empty() && fixture.auth_token) config.api_token = *fixture.auth_token;
      world = std::make_unique<MockWorld>(std::move(fixture));
      task.base_url = world->serve();
    }
    std::shared_ptr<ModelBackend> model =
        options.model_factory ? options.model_factory(scenario)
                              : std::make_shared<ScriptedModel>(load_transcript(scenario.transcript_path));
    LlmSession session = gateway.open(key, model);
    RunnerConfig runner = options.runner;
    runner.timeout_ms = config.sandbox_timeout_ms;
    PipelineDeps deps;
    deps.toolbox = &toolbox;
    deps.session = &session;
    deps.repository = options.repository;
    deps.execute = make_executor(runner, config.api_token);
    deps.world = world.get();
    Pipeline pipeline(deps, config);
    result.trace = pipeline.run_task(task);
  } catch (const std::exception& e) {
    result.trace.task_id = task.id;
    result.trace.error = std::string("ScenarioError: ") + e.what();
  }
  const RunTrace& trace = result.trace;
  result.llm_calls = gateway.call_count(key);
  result.reflection_rounds = trace.reflection_rounds;
  result.final_answer = trace.final_answer;
  result.error = trace.error;
  const bool ok = !trace.reports.empty() && trace.reports.back().status == ExecutionStatus::ok;
  result.status = trace.reports.empty() ? "error" : to_string(trace.reports.back().status);
  if (task.ground_truth_answer) result.accuracy = accuracy(trace.final_answer, *task.ground_truth_answer, trailing);
  result.success = ok && result.accuracy.value_or(1) == 1;
  if (!task.ground_truth_tools.empty()) result.path_rate = path_rate(trace.called_paths, task.ground_truth_tools);
  if (!scenario.ground_truth_calls.empty()) result.correctness = correctness(trace.requests, scenario.ground_truth_calls);
  return result;
}

}  // namespace

MetricsReport run_suite(const Suite& suite, const Toolbox& toolbox, const SuiteOptions& options,
                        LlmGateway& gateway) {
  if (suite.scenarios.empty()) throw SuiteError("suite has no scenarios");
  validate(options.pipeline);
  const std::size_t n = suite.scenarios.size();
  std::vector<ScenarioResult> results(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      results[i] = run_one(suite.scenarios[i], i, toolbox, options, suite.trailing_number, gateway);
    }
  };
  const std::size_t width = std::clamp<std::size_t>(options.workers, 1, n);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < width; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  MetricsReport report;
  report.success_definition = std::string(kSuccessDefinition);
  report.ablations = {{"no_repository", !options.pipeline.use_repository || options.repository == nullptr},
                      {"no_reflection", !options.pipeline.use_reflection},
                      {"plan_without_scaffold", options.pipeline.plan_without_scaffold}};
  report.scenario_count = n;
  std::vector<double> acc;
  std::vector<double> paths;
  std::vector<double> corr;
  std::vector<double> calls;
  std::vector<int> success_ind;
  std::vector<int> acc_ind;
  double successes = 0;
  for (const auto& r : results) {
    successes += r.success ? 1 : 0;
    if (r.accuracy) acc.push_back(*r.accuracy);
    if (r.path_rate) paths.push_back(*r.path_rate);
    if (r.correctness) corr.push_back(*r.correctness);
    calls.push_back(static_cast<double>(r.llm_calls));
    success_ind.push_back(r.success ? 1 : 0);
    acc_ind.push_back(r.accuracy.value_or(0));
  }
  report.success_rate = successes / static_cast<double>(n);
  if (!acc.empty()) report.accuracy = mean(acc);
  if (!paths.empty()) report.path_rate = mean(paths);
  if (!corr.empty()) report.correctness = mean(corr);
  report.avg_llm_calls = mean(calls);
  report.cumulative = cumulative_series(success_ind, acc_ind);
  report.results = std::move(results);
  return report;
}

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json metrics_to_json(const MetricsReport& report, bool include_traces) {
  Json cumulative = Json::array();
  for (const auto& p : report.cumulative) {
    cumulative.push_back({{"proportion", p.proportion}, {"cum_success", p.cum_success}, {"cum_accuracy", p.cum_accuracy}});
  }
  Json scenarios = Json::array();
  for (const auto& r : report.results) {
    Json s{{"index", r.index},
           {"task_id", r.task_id},
           {"success", r.success},
           {"accuracy", r.accuracy ? Json(*r.accuracy) : Json(nullptr)},
           {"path_rate", optional_json(r.path_rate)},
           {"correctness", optional_json(r.correctness)},
           {"llm_calls", r.llm_calls},
           {"reflection_rounds", r.reflection_rounds},
           {"status", r.status},
           {"final_answer", r.final_answer ? Json(*r.final_answer) : Json(nullptr)},
           {"error", r.error ? Json(*r.error) : Json(nullptr)}};
    if (include_traces) s["trace"] = r.trace;
    scenarios.push_back(std::move(s));
  }
  return Json{{"format_version", kFormatVersion},
              {"header", {{"success_definition", report.success_definition}, {"ablations", report.ablations}}},
              {"scenario_count", report.scenario_count},
              {"metrics",
               {{"success_rate", report.success_rate},
                {"accuracy", optional_json(report.accuracy)},
                {"path_rate", optional_json(report.path_rate)},
                {"correctness", optional_json(report.correctness)},
                {"avg_llm_calls", report.avg_llm_calls}}},
              {"cumulative", cumulative},
              {"scenarios", scenarios}};
}

std::string render_table(const MetricsReport& report) {
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *v * 100.0);
    return std::string(buf);
  };
  std::string out = "# " + report.success_definition + "\n";
  std::string ablations;
  for (const auto& [name, on] : report.ablations) {
    if (on) ablations += (ablations.empty() ? "" : ", ") + name;
  }
  out += "# ablations: " + (ablations.empty() ? std::string("none") : ablations) + "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s %-12s %-10s %s\n", "Success%", "Accuracy%", "Path%",
                "Correctness%", "AvgCalls", "Scenarios");
  out += buf;
  char calls[32];
  std::snprintf(calls, sizeof calls, "%.2f", report.avg_llm_calls);
  std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s %-12s %-10s %zu\n", pct(report.success_rate).c_str(),
                pct(report.accuracy).c_str(), pct(report.path_rate).c_str(), pct(report.correctness).c_str(), calls,
                report.scenario_count);
  out += buf;
  return out;
}

std::string render_cumulative_csv(const MetricsReport& report) {
  std::string out = "proportion,cum_success,cum_accuracy\n";
  char buf[128];
  for (const auto& p : report.cumulative) {
    std::snprintf(buf, sizeof buf, "%.4f,%.6f,%.6f\n", p.proportion, p.cum_success, p.cum_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace codetool
