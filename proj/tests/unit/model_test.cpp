#include <gtest/gtest.h>

#include "codetool/model.hpp"

using namespace codetool;

namespace {

template <typename T>
T round_trip(const T& v) {
  return Json::parse(Json(v).dump()).get<T>();
}

RunTrace sample_trace() {
  RunTrace t;
  t.task_id = "t1";
  t.llm_calls = {{Stage::t2c, "p1", "r1"}, {Stage::review, "p2", "r2"}};
  t.called_paths = {"/3/search/person"};
  ExecutionReport bad;
  bad.status = ExecutionStatus::exception;
  bad.exception = ExceptionInfo{"KeyError", "'crew'", {{"program.py", 17, "main", "x['crew']"}}};
  ExecutionReport good;
  good.stdout_text = "hello\n8\n";
  good.answer = "8";
  good.duration_ms = 12;
  t.reports = {bad, good};
  t.reflection_rounds = 1;
  t.final_answer = "8";
  t.warnings = {"w"};
  t.requests = {{"GET", "/3/search/person", true, {{"query", "Sofia Coppola"}}, 200, 5}};
  return t;
}

}  // namespace

TEST(ModelJson, TaskRoundTrip) {
  Task t{"id", "query", {"/a", "/b"}, "8", "http://127.0.0.1:1"};
  EXPECT_EQ(round_trip(t), t);
  Task bare{"id", "q", {}, std::nullopt, ""};
  EXPECT_TRUE(Json(bare).at("ground_truth_answer").is_null());
  EXPECT_EQ(round_trip(bare), bare);
}

TEST(ModelJson, ToolDocRoundTrip) {
  ToolDoc d;
  d.api_path = "/3/person/{person_id}";
  d.description = "details";
  d.parameters = {{"person_id", "integer", true, "id"}};
  d.response_schema = Json{{"id", "integer"}};
  d.reusable_code = "def f():\n    pass\n";
  EXPECT_EQ(round_trip(d), d);
}

TEST(ModelJson, ProgramsRoundTrip) {
  PseudoProgram p{"call_api(api_path=\"/a\")", {{"/a", "", {0, 22}}}};
  EXPECT_EQ(round_trip(p), p);
  GeneratedProgram g{"def f():\n    pass\n", {{"f", "/a", {0, 18}}, {"g", std::nullopt, {0, 1}}}};
  EXPECT_EQ(round_trip(g), g);
  Scaffold s{"f", {{"x", "int"}}, "int", "doc x", "    pass\n", "if __name__ == \"__main__\":\n    f(1)\n", "src"};
  EXPECT_EQ(round_trip(s), s);
  SubtaskPlan plan{{"one", "two"}, "# Step 1. one\n# Step 2. two\n"};
  EXPECT_EQ(round_trip(plan), plan);
}

TEST(ModelJson, TraceRoundTrip) {
  const RunTrace t = sample_trace();
  EXPECT_EQ(round_trip(t), t);
  const Json j = t;
  EXPECT_EQ(j.at("reports").at(0).at("status"), "exception");
  EXPECT_EQ(j.at("llm_calls").at(1).at("stage"), "review");
}

TEST(ModelJson, RepoEntryRoundTrip) {
  RepoEntry e{"/a", "f", "def f():\n    pass\n", "task", 42};
  EXPECT_EQ(round_trip(e), e);
}

TEST(ModelJson, UnknownStageIsParseError) {
  EXPECT_THROW(stage_from_string("compile"), ParseError);
  for (Stage s : {Stage::t2c, Stage::plan, Stage::select, Stage::codegen, Stage::reformulate, Stage::review}) {
    EXPECT_EQ(stage_from_string(to_string(s)), s);
  }
}

TEST(ModelHelpers, LastNonemptyLine) {
  EXPECT_EQ(last_nonempty_line("a\nb  \n\n  \n"), "b");
  EXPECT_EQ(last_nonempty_line("Number of movies directed by Sofia Coppola: 8\n"),
            "Number of movies directed by Sofia Coppola: 8");
  EXPECT_EQ(last_nonempty_line(""), std::nullopt);
  EXPECT_EQ(last_nonempty_line(" \n\t\n"), std::nullopt);
}

TEST(ModelHelpers, DedupFirstKeepsFirstOccurrence) {
  EXPECT_EQ(dedup_first({"b", "a", "b", "c", "a"}), (std::vector<std::string>{"b", "a", "c"}));
}

TEST(ModelValidate, Task) {
  EXPECT_THROW(validate(Task{"id", "   ", {}, {}, ""}), ValidationError);
  EXPECT_THROW(validate(Task{"id", "q", {"/a", "/a"}, {}, ""}), ValidationError);
  EXPECT_NO_THROW(validate(Task{"id", "q", {"/a", "/b"}, {}, ""}));
}

TEST(ModelValidate, ExecutionReport) {
  ExecutionReport r;
  r.status = ExecutionStatus::exception;
  EXPECT_THROW(validate(r), ValidationError);
  r.exception = ExceptionInfo{"E", "m", {}};
  EXPECT_THROW(validate(r), ValidationError);
  r.exception->frames = {{"program.py", 0, "f", ""}};
  EXPECT_THROW(validate(r), ValidationError);
  r.exception->frames[0].line = 1;
  EXPECT_NO_THROW(validate(r));
  r.status = ExecutionStatus::ok;
  EXPECT_THROW(validate(r), ValidationError);
}

TEST(ModelValidate, GeneratedProgramSpans) {
  GeneratedProgram g{"0123456789", {{"a", {}, {0, 5}}, {"b", {}, {4, 8}}}};
  EXPECT_THROW(validate(g), ValidationError);
  g.sub_functions[1].span = {5, 10};
  EXPECT_NO_THROW(validate(g));
  g.sub_functions[1].span = {5, 11};
  EXPECT_THROW(validate(g), ValidationError);
}

TEST(ModelValidate, RepoEntryNeedsExactlyOneFunction) {
  EXPECT_THROW(validate(RepoEntry{"/a", "f", "x = 1\n", "t", 0}), ValidationError);
  EXPECT_THROW(validate(RepoEntry{"/a", "f", "def f():\n    pass\ndef g():\n    pass\n", "t", 0}),
               ValidationError);
  EXPECT_THROW(validate(RepoEntry{"a", "f", "def f():\n    pass\n", "t", 0}), ValidationError);
  EXPECT_NO_THROW(validate(RepoEntry{"/a", "f", "# api_path: /a\ndef f():\n    pass\n", "t", 0}));
}

TEST(ModelValidate, TraceBounds) {
  RunTrace t = sample_trace();
  EXPECT_NO_THROW(validate(t, 3));
  t.reflection_rounds = 4;
  EXPECT_THROW(validate(t, 3), ValidationError);
  t.reflection_rounds = 0;
  t.called_paths = {"/a", "/a"};
  EXPECT_THROW(validate(t, 3), ValidationError);
}

TEST(ModelValidate, SubtaskPlanMustEmbedAsComments) {
  EXPECT_THROW(validate(SubtaskPlan{{}, ""}), ValidationError);
  EXPECT_THROW(validate(SubtaskPlan{{"one"}, "x = 'one'\n"}), ValidationError);
  EXPECT_NO_THROW(validate(SubtaskPlan{{"one"}, "    # Step 1. one\n"}));
}
