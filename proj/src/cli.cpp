#include "codetool/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "codetool/eval.hpp"
#include "codetool/executor.hpp"
#include "codetool/function_repo.hpp"
#include "codetool/llm.hpp"
#include "codetool/mock_world.hpp"
#include "codetool/pipeline.hpp"
#include "codetool/toolbox.hpp"

namespace codetool {

namespace {

constexpr const char* kDefaultRunner = "python3 -m codetool_runner {program}";

struct Options {
  std::string toolbox;
  std::string repo;
  std::string transcript;
  std::string provider;
  std::string fixture;
  std::string base_url;
  std::string out_path;
  std::string csv_path;
  std::string trace_out;
  std::string suite;
  std::string runner = kDefaultRunner;
  std::string query;
  std::string task_id = "cli";
  std::string path;
  bool no_repo = false;
  bool no_reflection = false;
  bool plan_without_scaffold = false;
  bool table = false;
  int max_review = 3;
  int max_reformulations = 2;
  int timeout_ms = 60000;
  std::size_t workers = 1;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_pipeline_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--toolbox", o.toolbox, "Toolbox JSON file")->required();
  cmd->add_option("--repo", o.repo, "Function repository JSONL store");
  cmd->add_option("--mock-llm", o.transcript, "Scripted transcript (mock mode)");
  cmd->add_option("--provider", o.provider, "Provider config JSON (live mode)");
  cmd->add_flag("--no-repo", o.no_repo, "Disable the function repository");
  cmd->add_flag("--no-reflection", o.no_reflection, "Disable plan reformulation and code review");
  cmd->add_flag("--plan-without-scaffold", o.plan_without_scaffold, "Plan from the raw query");
  cmd->add_option("--max-review", o.max_review, "Review rounds cap")->capture_default_str();
  cmd->add_option("--max-reformulations", o.max_reformulations, "Reformulation budget")->capture_default_str();
  cmd->add_option("--timeout-ms", o.timeout_ms, "Sandbox timeout")->capture_default_str();
  cmd->add_option("--runner", o.runner, "Runner command; {program} is the program file")->capture_default_str();
}

PipelineConfig pipeline_config(const Options& o) {
  PipelineConfig cfg;
  cfg.max_review_rounds = o.max_review;
  cfg.max_reformulations = o.max_reformulations;
  cfg.use_repository = !o.no_repo;
  cfg.use_reflection = !o.no_reflection;
  cfg.plan_without_scaffold = o.plan_without_scaffold;
  cfg.sandbox_timeout_ms = o.timeout_ms;
  if (const char* token = std::getenv(std::string(kApiTokenEnv).c_str())) cfg.api_token = token;
  try {
    validate(cfg);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

RunnerConfig runner_config(const Options& o) {
  RunnerConfig r;
  r.command = split_command(o.runner);
  if (r.command.empty()) throw UsageError("--runner must not be empty");
  r.timeout_ms = o.timeout_ms;
  return r;
}

std::unique_ptr<FunctionRepository> open_repo(const Options& o, std::ostream& err) {
  if (o.no_repo) return nullptr;
  auto repo = std::make_unique<FunctionRepository>(o.repo.empty() ? FunctionRepository()
                                                                   : FunctionRepository::load(o.repo));
  if (const auto& c = repo->corruption()) {
    err << "warning: repository line " << c->line_number << " is corrupt (" << c->message
        << "); later lines ignored\n";
  }
  return repo;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.transcript.empty() == o.provider.empty()) {
    throw UsageError("run needs exactly one of --mock-llm or --provider");
  }
  const Toolbox toolbox = load_toolbox(o.toolbox);
  PipelineConfig cfg = pipeline_config(o);
  auto repo = open_repo(o, err);

  Task task;
  task.id = o.task_id;
  task.query = o.query;
  task.base_url = o.base_url.empty() ? cfg.upstream_base_url : o.base_url;
  std::unique_ptr<MockWorld> world;
  if (!o.fixture.empty()) {
    auto fixture = load_fixture(o.fixture);
    if (cfg.api_token.empty() && fixture.auth_token) cfg.api_token = *fixture.auth_token;
    world = std::make_unique<MockWorld>(std::move(fixture));
    task.base_url = world->serve();
  }
  validate(task);

  std::shared_ptr<ModelBackend> model;
  if (!o.transcript.empty()) {
    model = std::make_shared<ScriptedModel>(load_transcript(o.transcript));
  } else {
    model = std::make_shared<ChatCompletionModel>(load_provider_config(o.provider));
  }
  LlmGateway gateway;
  LlmSession session = gateway.open(task.id, model);
  PipelineDeps deps;
  deps.toolbox = &toolbox;
  deps.session = &session;
  deps.repository = repo.get();
  deps.execute = make_executor(runner_config(o), cfg.api_token);
  deps.world = world.get();
  Pipeline pipeline(deps, cfg);
  const RunTrace trace = pipeline.run_task(task);

  if (!o.trace_out.empty()) {
    std::ofstream f(o.trace_out, std::ios::binary);
    f << Json(trace).dump(2) << "\n";
    if (!f) err << "warning: cannot write trace to " << o.trace_out << "\n";
  }
  const bool ok = !trace.reports.empty() && trace.reports.back().status == ExecutionStatus::ok;
  if (trace.final_answer) out << *trace.final_answer << "\n";
  out << "# status=" << (trace.reports.empty() ? "error" : to_string(trace.reports.back().status))
      << " llm_calls=" << gateway.call_count(task.id) << " reflection_rounds=" << trace.reflection_rounds
      << " reformulation_rounds=" << trace.reformulation_rounds << "\n";
  if (!trace.called_paths.empty()) {
    out << "# called_paths:";
    for (const auto& p : trace.called_paths) out << " " << p;
    out << "\n";
  }
  for (const auto& w : trace.warnings) err << "warning: " << w << "\n";
  if (trace.error) err << "error: " << *trace.error << "\n";
  if (!ok && !trace.reports.empty() && trace.reports.back().exception) {
    const auto& ex = *trace.reports.back().exception;
    err << "error: " << ex.type_name << ": " << ex.message << "\n";
  }
  return ok ? kExitOk : kExitTaskFailure;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  const Toolbox toolbox = load_toolbox(o.toolbox);
  Suite suite;
  try {
    suite = load_suite(o.suite);
  } catch (const SuiteError& e) {
    throw UsageError(e.what());
  }
  SuiteOptions options;
  options.pipeline = pipeline_config(o);
  options.runner = runner_config(o);
  options.workers = o.workers;
  auto repo = open_repo(o, err);
  options.repository = repo.get();
  if (!o.provider.empty()) {
    auto provider = load_provider_config(o.provider);
    options.model_factory = [provider](const Scenario&) { return std::make_shared<ChatCompletionModel>(provider); };
  } else {
    for (const auto& s : suite.scenarios) {
      if (s.transcript_path.empty()) {
        throw UsageError("scenario " + s.task.id + " has no transcript and no --provider was given");
      }
    }
  }
  LlmGateway gateway;
  const MetricsReport report = run_suite(suite, toolbox, options, gateway);
  const std::string doc = metrics_to_json(report).dump(2);
  out << doc << "\n";
  if (!o.out_path.empty()) {
    std::ofstream f(o.out_path, std::ios::binary);
    f << doc << "\n";
    if (!f) throw StorageError("cannot write " + o.out_path);
  }
  if (!o.csv_path.empty()) {
    std::ofstream f(o.csv_path, std::ios::binary);
    f << render_cumulative_csv(report);
    if (!f) throw StorageError("cannot write " + o.csv_path);
  }
  if (o.table) err << render_table(report);
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Code-generation tool-use agent: run tasks, benchmark suites, manage the function repository"};
  app.name("codetool");
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Run one task end to end");
  add_pipeline_flags(run, o);
  run->add_option("--fixture", o.fixture, "Mock world fixture to serve");
  run->add_option("--base-url", o.base_url, "API base URL when no fixture is served");
  run->add_option("--trace-out", o.trace_out, "Write the run trace JSON here");
  run->add_option("--task-id", o.task_id, "Task id")->capture_default_str();
  run->add_option("query", o.query, "Natural-language task")->required();

  auto* bench = app.add_subcommand("bench", "Run a scenario suite and print metrics JSON");
  add_pipeline_flags(bench, o);
  bench->add_option("--suite", o.suite, "Suite manifest")->required();
  bench->add_option("--out", o.out_path, "Also write the metrics JSON here");
  bench->add_option("--csv", o.csv_path, "Write the cumulative curve as CSV");
  bench->add_option("--workers", o.workers, "Parallel scenarios")->capture_default_str();
  bench->add_flag("--table", o.table, "Print a text table to stderr");

  auto* repo = app.add_subcommand("repo", "Inspect or clear the function repository");
  repo->require_subcommand(1);
  auto* repo_list = repo->add_subcommand("list", "List stored functions");
  auto* repo_show = repo->add_subcommand("show", "Print the stored source for an api_path");
  auto* repo_clear = repo->add_subcommand("clear", "Delete every entry");
  for (auto* c : {repo_list, repo_show, repo_clear}) c->add_option("--repo", o.repo, "Store path")->required();
  repo_show->add_option("api_path", o.path, "Tool path template")->required();

  auto* validate_cmd = app.add_subcommand("validate-toolbox", "Check a toolbox file");
  validate_cmd->add_option("path", o.path, "Toolbox JSON file")->required();

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(o, out, err);
    if (bench->parsed()) return cmd_bench(o, out, err);
    if (validate_cmd->parsed()) {
      const Toolbox toolbox = load_toolbox(o.path);
      out << "ok: " << toolbox.size() << " tools\n";
      return kExitOk;
    }
    if (repo->parsed()) {
      auto store = FunctionRepository::load(o.repo);
      if (const auto& c = store.corruption()) {
        err << "warning: repository line " << c->line_number << " is corrupt (" << c->message << ")\n";
      }
      if (repo_list->parsed()) {
        for (const auto& [path, entry] : store.snapshot()) {
          out << path << "\t" << entry.function_name << "\t" << entry.origin_task_id << "\t" << entry.created_at
              << "\n";
        }
        return kExitOk;
      }
      if (repo_show->parsed()) {
        const auto entry = store.get(o.path);
        if (!entry) {
          err << "no entry for " << o.path << "\n";
          return kExitTaskFailure;
        }
        out << entry->source;
        return kExitOk;
      }
      if (repo_clear->parsed()) {
        const auto n = store.size();
        store.clear();
        out << "cleared " << n << " entries\n";
        return kExitOk;
      }
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitTaskFailure;
  }
  return kExitUsage;
}

}  // namespace codetool
