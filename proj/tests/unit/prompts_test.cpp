#include <gtest/gtest.h>

#include "codetool/prompts.hpp"

using namespace codetool;

TEST(Prompts, EveryStageHasATemplate) {
  for (Stage s : {Stage::t2c, Stage::plan, Stage::select, Stage::codegen, Stage::reformulate, Stage::review}) {
    EXPECT_FALSE(prompt_template(s).empty()) << to_string(s);
  }
  EXPECT_EQ(kPromptVersion, "v1");
}

TEST(Prompts, TemplatesCarryTheirSlots) {
  EXPECT_NE(prompt_template(Stage::t2c).find("{question}"), std::string::npos);
  for (const char* slot : {"{toolbox}", "{question}", "{pseudo_code_task}"}) {
    EXPECT_NE(prompt_template(Stage::plan).find(slot), std::string::npos) << slot;
    EXPECT_NE(prompt_template(Stage::select).find(slot), std::string::npos) << slot;
  }
  for (const char* slot : {"{question}", "{code_solution}", "{api_doc}", "{base_url}"}) {
    EXPECT_NE(prompt_template(Stage::codegen).find(slot), std::string::npos) << slot;
  }
  for (const char* slot : {"{invalid_tools}", "{toolbox}", "{question}", "{program}"}) {
    EXPECT_NE(prompt_template(Stage::reformulate).find(slot), std::string::npos) << slot;
  }
  for (const char* slot : {"{program}", "{traceback}", "{question}"}) {
    EXPECT_NE(prompt_template(Stage::review).find(slot), std::string::npos) << slot;
  }
}

TEST(Prompts, PromptConventions) {
  EXPECT_NE(prompt_template(Stage::t2c).find("Use triple single quotes for the docstring"), std::string::npos);
  EXPECT_NE(prompt_template(Stage::plan).find("(denote as Step 1 to N)"), std::string::npos);
  EXPECT_NE(prompt_template(Stage::select).find("call_api(api_path, params)"), std::string::npos);
  EXPECT_NE(prompt_template(Stage::codegen).find("reusable_code"), std::string::npos);
  EXPECT_NE(prompt_template(Stage::codegen).find("# api_path: <api_path>"), std::string::npos);
}

TEST(RenderTemplate, SinglePassNoRescan) {
  const std::string out = render_template("a {x} b {y}", {{"x", "{y}"}, {"y", "Y"}});
  EXPECT_EQ(out, "a {y} b Y");
}

TEST(RenderTemplate, UnknownBracesSurvive) {
  EXPECT_EQ(render_template("{movie_id} {API_KEY} {q} { q } {}", {{"q", "1"}}), "{movie_id} {API_KEY} 1 { q } {}");
}

TEST(RenderTemplate, RepeatedSlotFilledEverywhere) {
  EXPECT_EQ(render_template("{q}-{q}", {{"q", "z"}}), "z-z");
}

TEST(RenderTemplate, MissingSlotIsTemplateError) {
  EXPECT_THROW(render_template("{a}", {{"a", "1"}, {"b", "2"}}), TemplateError);
}

TEST(RenderPrompt, PlanMentionsQuery) {
  const std::string out = render_prompt(
      Stage::plan, {{"toolbox", "GET /3/search/person: Search"}, {"question", "Q?"}, {"pseudo_code_task", "Q?"}});
  EXPECT_NE(out.find("User's Question: Q?"), std::string::npos);
  EXPECT_NE(out.find("Pseudo-Code Task: Q?"), std::string::npos);
  EXPECT_EQ(out.find("{toolbox}"), std::string::npos);
}

TEST(RenderPrompt, CodegenKeepsKeyPlaceholder) {
  const std::string out = render_prompt(
      Stage::codegen,
      {{"question", "q"}, {"code_solution", "c"}, {"api_doc", "[]"}, {"base_url", "https://api.themoviedb.org"}});
  EXPECT_NE(out.find("Use 'https://api.themoviedb.org' as the 'base_url'"), std::string::npos);
  EXPECT_NE(out.find("\"Bearer {API_KEY}\""), std::string::npos);
}
