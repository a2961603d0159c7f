#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "codetool/eval.hpp"
#include "support/test_support.hpp"

using namespace codetool;
using namespace testing_support;

namespace {

double brute_path_rate(const std::vector<std::string>& called, const std::vector<std::string>& truth) {
  const std::set<std::string> c(called.begin(), called.end());
  const std::set<std::string> t(truth.begin(), truth.end());
  int hit = 0;
  for (const auto& p : t) hit += c.count(p) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(t.size());
}

RequestRecord record(const std::string& path, std::map<std::string, std::string> params) {
  RequestRecord r;
  r.method = "GET";
  r.path = path;
  r.matched = true;
  r.params = std::move(params);
  r.status = 200;
  return r;
}

fs::path suite_manifest() { return data_dir() / "suite" / "suite.json"; }

SuiteOptions stub_options() {
  SuiteOptions o;
  o.runner = stub_config();
  return o;
}

bool transcript_has_reflection(const fs::path& path) {
  for (const auto& e : load_transcript(path).entries) {
    if (e.stage == Stage::review || e.stage == Stage::reformulate) return true;
  }
  return false;
}

}  // namespace

TEST(PathRate, Examples) {
  EXPECT_DOUBLE_EQ(path_rate({"/a", "/b"}, {"/a", "/b"}), 1.0);
  EXPECT_DOUBLE_EQ(path_rate({"/a"}, {"/a", "/b"}), 0.5);
  EXPECT_DOUBLE_EQ(path_rate({"/a", "/a", "/c"}, {"/a", "/b"}), 0.5);
  EXPECT_DOUBLE_EQ(path_rate({}, {"/a"}), 0.0);
  EXPECT_DOUBLE_EQ(path_rate({"/a", "/b", "/c"}, {"/a", "/a"}), 1.0);
  EXPECT_THROW(path_rate({"/a"}, {}), EmptyGroundTruth);
}

TEST(PathRate, MatchesBruteForce) {
  std::mt19937 rng(11);
  const std::vector<std::string> pool = {"/a", "/b", "/c", "/d", "/e", "/f"};
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> called, truth;
    for (int k = rng() % 7; k > 0; --k) called.push_back(pool[rng() % pool.size()]);
    for (int k = 1 + rng() % 5; k > 0; --k) truth.push_back(pool[rng() % pool.size()]);
    const double r = path_rate(called, truth);
    EXPECT_DOUBLE_EQ(r, brute_path_rate(called, truth));
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}

TEST(Accuracy, Examples) {
  EXPECT_EQ(accuracy(std::string("8"), "8"), 1);
  EXPECT_EQ(accuracy(std::string("  Eight  Movies "), "eight movies"), 1);
  EXPECT_EQ(accuracy(std::string("8.0"), "8"), 1);
  EXPECT_EQ(accuracy(std::string("9"), "8"), 0);
  EXPECT_EQ(accuracy(std::nullopt, "8"), 0);
  EXPECT_EQ(accuracy(std::string("Number of movies directed by Sofia Coppola: 8"), "8"), 0);
  EXPECT_EQ(accuracy(std::string("Number of movies directed by Sofia Coppola: 8"), "8", true), 1);
  EXPECT_EQ(accuracy(std::string("Number of movies directed by Sofia Coppola: 7"), "8", true), 0);
  EXPECT_EQ(accuracy(std::string("no number"), "8", true), 0);
}

TEST(Answers, NormalizeAndTrailingNumber) {
  EXPECT_EQ(normalize_answer("  A\tB \n C "), "a b c");
  EXPECT_EQ(trailing_number("Coppola: 8"), "8");
  EXPECT_EQ(trailing_number("between 3 and -4.5."), "-4.5");
  EXPECT_FALSE(trailing_number("none"));
}

TEST(Correctness, ParamsMustMatch) {
  const std::vector<GroundTruthCall> truth = {{"/3/search/person", {{"query", "Sofia Coppola"}}},
                                              {"/3/person/{person_id}/movie_credits", {{"person_id", "1769"}}}};
  EXPECT_DOUBLE_EQ(correctness({record("/3/search/person", {{"query", " Sofia Coppola "}}),
                                record("/3/person/{person_id}/movie_credits", {{"person_id", "1769"}})},
                               truth),
                   1.0);
  EXPECT_DOUBLE_EQ(correctness({record("/3/search/person", {{"query", "Sofia"}}),
                                record("/3/person/{person_id}/movie_credits", {{"person_id", "1769"}})},
                               truth),
                   0.5);
  EXPECT_DOUBLE_EQ(correctness({record("/3/search/person", {})}, truth), 0.0);
  EXPECT_THROW(correctness({}, {}), EmptyGroundTruth);
}

TEST(Cumulative, TenScenarios) {
  const auto pts = cumulative_series({1, 0, 1, 1, 0, 1, 1, 1, 0, 1}, {1, 0, 1, 0, 0, 1, 1, 1, 0, 1});
  ASSERT_EQ(pts.size(), 10u);
  EXPECT_DOUBLE_EQ(pts[0].proportion, 0.1);
  EXPECT_DOUBLE_EQ(pts[0].cum_success, 1.0);
  EXPECT_DOUBLE_EQ(pts[1].cum_success, 0.5);
  EXPECT_DOUBLE_EQ(pts[3].cum_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(pts[9].cum_success, 0.7);
  EXPECT_DOUBLE_EQ(pts[9].cum_accuracy, 0.6);
}

TEST(Cumulative, PrefixMeansMatchOracle) {
  std::mt19937 rng(3);
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 1 + rng() % 37;
    std::vector<int> s(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng() % 2;
      a[i] = rng() % 2;
    }
    const auto pts = cumulative_series(s, a);
    std::set<std::size_t> lengths;
    for (int k = 1; k <= 10; ++k) lengths.insert(static_cast<std::size_t>(std::ceil(k * static_cast<double>(n) / 10.0)));
    ASSERT_EQ(pts.size(), lengths.size());
    std::size_t i = 0;
    for (const std::size_t len : lengths) {
      const double d = static_cast<double>(len);
      EXPECT_NEAR(pts[i].proportion, d / static_cast<double>(n), 1e-12);
      EXPECT_NEAR(pts[i].cum_success, std::accumulate(s.begin(), s.begin() + len, 0) / d, 1e-12);
      EXPECT_NEAR(pts[i].cum_accuracy, std::accumulate(a.begin(), a.begin() + len, 0) / d, 1e-12);
      ++i;
    }
    EXPECT_DOUBLE_EQ(pts.back().proportion, 1.0);
  }
  EXPECT_TRUE(cumulative_series({}, {}).empty());
  EXPECT_THROW(cumulative_series({1}, {}), ValidationError);
}

TEST(LoadSuite, BundledManifest) {
  const Suite suite = load_suite(suite_manifest());
  ASSERT_EQ(suite.scenarios.size(), 10u);
  EXPECT_TRUE(suite.trailing_number);
  const Scenario& first = suite.scenarios[0];
  EXPECT_EQ(first.task.id, "directed-sofia_coppola");
  EXPECT_TRUE(fs::exists(first.transcript_path));
  EXPECT_TRUE(fs::exists(first.fixture_path));
  ASSERT_EQ(first.ground_truth_calls.size(), 2u);
  EXPECT_EQ(first.ground_truth_calls[1].required_params.at("person_id"), "1769");
}

TEST(LoadSuite, Errors) {
  TempDir dir;
  EXPECT_THROW(load_suite(dir / "missing.json"), SuiteError);
  write_file(dir / "bad.json", "{");
  EXPECT_THROW(load_suite(dir / "bad.json"), SuiteError);
  write_file(dir / "ref.json",
             R"({"scenarios":[{"task":{"id":"t","query":"q"},"transcript":"nope.json"}]})");
  EXPECT_THROW(load_suite(dir / "ref.json"), SuiteError);
  write_file(dir / "empty.json", R"({"scenarios":[]})");
  LlmGateway g;
  EXPECT_THROW(run_suite(load_suite(dir / "empty.json"), tmdb_toolbox(), stub_options(), g), SuiteError);
}

TEST(RunSuite, FullPipelineSolvesEveryScenario) {
  const Suite suite = load_suite(suite_manifest());
  LlmGateway g;
  const MetricsReport report = run_suite(suite, tmdb_toolbox(), stub_options(), g);
  ASSERT_EQ(report.results.size(), suite.scenarios.size());
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const auto& r = report.results[i];
    EXPECT_TRUE(r.success) << r.task_id << " " << r.error.value_or("");
    EXPECT_EQ(r.index, i);
    EXPECT_EQ(r.task_id, suite.scenarios[i].task.id);
    EXPECT_EQ(trailing_number(r.final_answer.value_or("")), suite.scenarios[i].task.ground_truth_answer);
    EXPECT_EQ(r.llm_calls, load_transcript(suite.scenarios[i].transcript_path).entries.size());
  }
  EXPECT_DOUBLE_EQ(report.success_rate, 1.0);
  EXPECT_EQ(report.accuracy, 1.0);
  EXPECT_EQ(report.path_rate, 1.0);
  EXPECT_EQ(report.correctness, 1.0);
  EXPECT_EQ(report.cumulative.size(), 10u);
  EXPECT_TRUE(report.ablations.at("no_repository"));
  EXPECT_FALSE(report.ablations.at("no_reflection"));

  const Json doc = metrics_to_json(report);
  EXPECT_EQ(doc.at("header").at("success_definition"), std::string(kSuccessDefinition));
  EXPECT_EQ(doc.at("scenarios").size(), 10u);
  EXPECT_FALSE(doc.at("scenarios")[0].contains("trace"));
  EXPECT_TRUE(metrics_to_json(report, true).at("scenarios")[0].contains("trace"));
  EXPECT_NE(render_table(report).find("# ablations: no_repository"), std::string::npos);
  EXPECT_EQ(render_cumulative_csv(report).rfind("proportion,cum_success,cum_accuracy\n0.1000,", 0), 0u);
}

TEST(RunSuite, NoReflectionFailsExactlyTheScenariosThatNeedIt) {
  const Suite suite = load_suite(suite_manifest());
  SuiteOptions o = stub_options();
  o.pipeline.use_reflection = false;
  LlmGateway g;
  const MetricsReport ablated = run_suite(suite, tmdb_toolbox(), o, g);
  std::size_t needing = 0;
  for (std::size_t i = 0; i < suite.scenarios.size(); ++i) {
    const bool needs = transcript_has_reflection(suite.scenarios[i].transcript_path);
    needing += needs ? 1 : 0;
    EXPECT_EQ(ablated.results[i].success, !needs) << suite.scenarios[i].task.id;
    EXPECT_EQ(ablated.results[i].reflection_rounds, 0);
  }
  ASSERT_GT(needing, 0u);
  EXPECT_LT(ablated.success_rate, 1.0);
  EXPECT_DOUBLE_EQ(ablated.success_rate, 1.0 - static_cast<double>(needing) / suite.scenarios.size());
  EXPECT_TRUE(ablated.ablations.at("no_reflection"));
}

TEST(RunSuite, DeterministicAcrossRunsAndWorkers) {
  const Suite suite = load_suite(suite_manifest());
  LlmGateway g1, g2;
  SuiteOptions parallel = stub_options();
  parallel.workers = 4;
  const Json a = metrics_to_json(run_suite(suite, tmdb_toolbox(), stub_options(), g1));
  const Json b = metrics_to_json(run_suite(suite, tmdb_toolbox(), parallel, g2));
  EXPECT_EQ(a, b);
}

TEST(RunSuite, SharedRepositoryHarvestsAcrossScenarios) {
  const Suite suite = load_suite(suite_manifest());
  FunctionRepository repo;
  SuiteOptions o = stub_options();
  o.repository = &repo;
  LlmGateway g;
  const MetricsReport report = run_suite(suite, tmdb_toolbox(), o, g);
  EXPECT_DOUBLE_EQ(report.success_rate, 1.0);
  EXPECT_FALSE(report.ablations.at("no_repository"));
  EXPECT_EQ(repo.size(), 2u);
  EXPECT_EQ(repo.history().size(), 2u * suite.scenarios.size());
  const std::string escaped = Json(repo.get("/3/search/person")->source).dump();
  const auto& later = report.results[1].trace.llm_calls;
  bool found = false;
  for (const auto& c : later) {
    if (c.stage == Stage::codegen) found = c.prompt.find(escaped.substr(1, escaped.size() - 2)) != std::string::npos;
  }
  EXPECT_TRUE(found);
}

TEST(RunSuite, ScenarioErrorsAreRecorded) {
  TempDir dir;
  write_file(dir / "t.json", Json(Transcript{{entry(Stage::t2c, "nothing"), entry(Stage::t2c, "nothing")}}).dump());
  write_file(dir / "suite.json",
             R"({"scenarios":[{"task":{"id":"t","query":"q","ground_truth_answer":"1"},"transcript":"t.json"}]})");
  LlmGateway g;
  const MetricsReport report = run_suite(load_suite(dir / "suite.json"), tmdb_toolbox(), stub_options(), g);
  ASSERT_EQ(report.results.size(), 1u);
  EXPECT_FALSE(report.results[0].success);
  EXPECT_EQ(report.results[0].status, "error");
  EXPECT_EQ(report.results[0].accuracy, 0);
  EXPECT_FALSE(report.results[0].path_rate);
  EXPECT_FALSE(report.path_rate);
  ASSERT_TRUE(report.results[0].error);
  EXPECT_EQ(report.results[0].error->rfind("ScaffoldParseError", 0), 0u);
}
