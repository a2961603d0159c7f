#include <gtest/gtest.h>

#include "python_lexer.hpp"

using codetool::detail::ByteClass;
using codetool::detail::LexedSource;
using codetool::detail::LineKind;

TEST(PythonLexer, ClassifiesStringsAndComments) {
  const std::string src = "x = \"a#b\"  # note ( \ny = 'c'\n";
  LexedSource lx(src);
  EXPECT_EQ(lx.at(src.find("a#b") + 1), ByteClass::string);
  EXPECT_EQ(lx.at(src.find("# note")), ByteClass::comment);
  EXPECT_EQ(lx.at(src.find("y")), ByteClass::code);
  ASSERT_EQ(lx.strings().size(), 2u);
  EXPECT_EQ(src.substr(lx.strings()[0].content.start, lx.strings()[0].content.size()), "a#b");
  EXPECT_EQ(lx.code_text(0, src.size()), "x = \"a#b\"  \ny = 'c'\n");
}

TEST(PythonLexer, PrefixedAndTripleQuotedLiterals) {
  const std::string src = "u = f\"{a}\"\nv = rb'\\d'\nw = '''one\n'two'\n'''\nname_f = 1\n";
  LexedSource lx(src);
  ASSERT_EQ(lx.strings().size(), 3u);
  EXPECT_EQ(lx.strings()[0].span.start, src.find("f\""));
  EXPECT_EQ(lx.strings()[1].span.start, src.find("rb'"));
  EXPECT_TRUE(lx.strings()[2].triple);
  EXPECT_EQ(src.substr(lx.strings()[2].content.start, lx.strings()[2].content.size()), "one\n'two'\n");
  EXPECT_NE(lx.string_at(src.find("f\"")), nullptr);
  EXPECT_EQ(lx.string_at(src.find("name_f")), nullptr);
  EXPECT_EQ(lx.at(src.find("name_f") + 5), ByteClass::code);
}

TEST(PythonLexer, LogicalLinesJoinBracketsAndBackslashes) {
  const std::string src = "a = (1,\n     2)\nb = 1 + \\\n    2\n\n# c\n";
  LexedSource lx(src);
  ASSERT_EQ(lx.lines().size(), 4u);
  EXPECT_EQ(lx.line_text(lx.lines()[0]), "a = (1,\n     2)");
  EXPECT_EQ(lx.lines()[1].kind, LineKind::statement);
  EXPECT_EQ(lx.lines()[2].kind, LineKind::blank);
  EXPECT_EQ(lx.lines()[3].kind, LineKind::comment);
}

TEST(PythonLexer, IndentCountsTabsToEight) {
  LexedSource lx("if x:\n\ty = 1\n  \tz = 2\n");
  ASSERT_EQ(lx.lines().size(), 3u);
  EXPECT_EQ(lx.lines()[1].indent, 8);
  EXPECT_EQ(lx.lines()[2].indent, 8);
}

TEST(PythonLexer, MatchBracketSkipsStringsAndComments) {
  const std::string src = "f(a, \")\", [1, 2], {'k': (3)}  # )\n)";
  LexedSource lx(src);
  EXPECT_EQ(lx.match_bracket(1, src.size()), src.size() - 1);
  EXPECT_EQ(lx.match_bracket(1, src.size() - 1), std::string_view::npos);
}

TEST(PythonLexer, MatchBracketRejectsMismatchedCloser) {
  const std::string src = "f(a]";
  LexedSource lx(src);
  EXPECT_EQ(lx.match_bracket(1, src.size()), std::string_view::npos);
}

TEST(PythonLexer, BlockEndStopsAtDedentedStatement) {
  const std::string src = "def f():\n    x = 1\n\n# trailing\n    y = 2\n\nz = 3\n";
  LexedSource lx(src);
  std::size_t last = 0;
  const auto end = lx.block_end(0, &last);
  EXPECT_EQ(src.substr(0, end), "def f():\n    x = 1\n\n# trailing\n    y = 2\n");
  EXPECT_EQ(lx.line_text(lx.lines()[last]), "    y = 2");
}
