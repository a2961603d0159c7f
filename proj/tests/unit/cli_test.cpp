#include <gtest/gtest.h>

#include <sstream>

#include "codetool/cli.hpp"
#include "codetool/model.hpp"
#include "support/test_support.hpp"

using namespace codetool;
using namespace testing_support;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "codetool");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string toolbox() { return (data_dir() / "tmdb_toolbox.json").string(); }
std::string runner() { return "\"" + stub_runner() + "\" {program}"; }

std::vector<std::string> sofia_run(const std::string& repo) {
  return {"run",
          "--toolbox", toolbox(),
          "--mock-llm", (data_dir() / "sofia_transcript.json").string(),
          "--fixture", (data_dir() / "tmdb_world.json").string(),
          "--runner", runner(),
          "--repo", repo,
          "give me the number of movies directed by Sofia Coppola"};
}

}  // namespace

TEST(Cli, RunSofiaMockMode) {
  TempDir dir;
  const auto o = cli(sofia_run((dir / "repo.jsonl").string()));
  EXPECT_EQ(o.code, kExitOk) << o.err;
  EXPECT_NE(o.out.find("Number of movies directed by Sofia Coppola: 8\n"), std::string::npos);
  EXPECT_NE(o.out.find("# status=ok llm_calls=4 reflection_rounds=0"), std::string::npos);
  EXPECT_NE(o.out.find("# called_paths: /3/search/person /3/person/{person_id}/movie_credits"), std::string::npos);

  const auto list = cli({"repo", "list", "--repo", (dir / "repo.jsonl").string()});
  EXPECT_EQ(list.code, kExitOk);
  EXPECT_EQ(std::count(list.out.begin(), list.out.end(), '\n'), 2);
  EXPECT_NE(list.out.find("/3/search/person\tsearch_person\tcli\t"), std::string::npos);

  const auto show = cli({"repo", "show", "--repo", (dir / "repo.jsonl").string(), "/3/search/person"});
  EXPECT_EQ(show.code, kExitOk);
  EXPECT_EQ(show.out.rfind("# api_path: /3/search/person\ndef search_person(", 0), 0u);
  EXPECT_EQ(cli({"repo", "show", "--repo", (dir / "repo.jsonl").string(), "/3/movie/popular"}).code,
            kExitTaskFailure);

  const auto clear = cli({"repo", "clear", "--repo", (dir / "repo.jsonl").string()});
  EXPECT_EQ(clear.out, "cleared 2 entries\n");
  EXPECT_EQ(cli({"repo", "list", "--repo", (dir / "repo.jsonl").string()}).out, "");
}

TEST(Cli, RunWritesTrace) {
  TempDir dir;
  auto args = sofia_run((dir / "repo.jsonl").string());
  args.insert(args.end() - 1, {"--trace-out", (dir / "trace.json").string()});
  ASSERT_EQ(cli(args).code, kExitOk);
  const RunTrace trace = Json::parse(read_file(dir / "trace.json")).get<RunTrace>();
  EXPECT_EQ(trace.llm_calls.size(), 4u);
  EXPECT_EQ(trace.final_answer, "Number of movies directed by Sofia Coppola: 8");
}

TEST(Cli, FailedTaskExitsOne) {
  TempDir dir;
  write_file(dir / "t.json", Json(Transcript{{entry(Stage::t2c, "x"), entry(Stage::t2c, "y")}}).dump());
  const auto o = cli({"run", "--toolbox", toolbox(), "--mock-llm", (dir / "t.json").string(), "--runner", runner(),
                      "--no-repo", "q"});
  EXPECT_EQ(o.code, kExitTaskFailure);
  EXPECT_NE(o.out.find("# status=error llm_calls=2"), std::string::npos);
  EXPECT_NE(o.err.find("ScaffoldParseError"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"run", "--toolbox", toolbox(), "q"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--toolbox", toolbox(), "--mock-llm", "a", "--provider", "b", "q"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--mock-llm", "a", "q"}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"bench", "--toolbox", toolbox(), "--suite", "/nonexistent.json"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--toolbox", toolbox(), "--mock-llm", "a", "--max-review", "-1", "q"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, BenchWritesMetricsWithAblations) {
  TempDir dir;
  const auto o = cli({"bench", "--toolbox", toolbox(), "--suite", (data_dir() / "suite" / "suite.json").string(),
                      "--runner", runner(), "--no-repo", "--no-reflection", "--out", (dir / "m.json").string(),
                      "--csv", (dir / "c.csv").string(), "--table"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const Json doc = Json::parse(read_file(dir / "m.json"));
  EXPECT_EQ(doc, Json::parse(o.out));
  EXPECT_EQ(doc.at("scenario_count"), 10);
  EXPECT_TRUE(doc.at("header").at("ablations").at("no_reflection").get<bool>());
  EXPECT_TRUE(doc.at("header").at("ablations").at("no_repository").get<bool>());
  EXPECT_FALSE(doc.at("header").at("ablations").at("plan_without_scaffold").get<bool>());
  EXPECT_LT(doc.at("metrics").at("success_rate").get<double>(), 1.0);
  EXPECT_NE(o.err.find("# ablations: no_reflection, no_repository"), std::string::npos);
  EXPECT_EQ(read_file(dir / "c.csv").rfind("proportion,cum_success,cum_accuracy\n", 0), 0u);
}

TEST(Cli, ValidateToolbox) {
  const auto o = cli({"validate-toolbox", toolbox()});
  EXPECT_EQ(o.code, kExitOk);
  EXPECT_EQ(o.out, "ok: 54 tools\n");
  TempDir dir;
  write_file(dir / "bad.json", R"({"format_version":1,"tools":[]})");
  EXPECT_EQ(cli({"validate-toolbox", (dir / "bad.json").string()}).code, kExitTaskFailure);
}
