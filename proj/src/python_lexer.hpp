#pragma once

// Line/bracket-level lexer for guest (Python-like) source. It classifies
// every byte as code, string, or comment and groups physical lines into
// logical lines; it does not build a syntax tree.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "codetool/model.hpp"

namespace codetool::detail {

enum class ByteClass : std::uint8_t { code, string, comment };

struct StringLiteral {
  ByteSpan span;     // prefix and delimiters included
  ByteSpan content;  // between the delimiters
  bool triple = false;
};

enum class LineKind : std::uint8_t { blank, comment, statement };

struct LogicalLine {
  std::size_t start = 0;  // first byte of the first physical line
  std::size_t end = 0;    // one past the terminating newline (or source end)
  std::size_t first = 0;  // first non-whitespace byte
  int indent = 0;         // columns, tabs rounded up to multiples of 8
  LineKind kind = LineKind::blank;
};

class LexedSource {
 public:
  explicit LexedSource(std::string_view source);

  std::string_view source() const noexcept { return source_; }
  ByteClass at(std::size_t i) const { return classes_[i]; }
  bool is_code(std::size_t i) const { return classes_[i] == ByteClass::code; }
  const std::vector<StringLiteral>& strings() const noexcept { return strings_; }
  const std::vector<LogicalLine>& lines() const noexcept { return lines_; }

  /// String literal starting exactly at `offset`, if any.
  const StringLiteral* string_at(std::size_t offset) const;

  /// Text of [begin, end) with comments removed and string literals kept.
  std::string code_text(std::size_t begin, std::size_t end) const;

  /// Logical line text without the trailing newline.
  std::string_view line_text(const LogicalLine& line) const;

  /// Offset of the matching closer for the opener at `open`, honouring
  /// strings and comments; npos when unbalanced before `limit`.
  std::size_t match_bracket(std::size_t open, std::size_t limit) const;

  /// End offset of the block introduced by the logical line `header_index`:
  /// the end of the last following line indented deeper than the header.
  /// Blank lines and comments at or left of the header indent are not part
  /// of the block.
  std::size_t block_end(std::size_t header_index, std::size_t* last_line_index = nullptr) const;

 private:
  std::string_view source_;
  std::vector<ByteClass> classes_;
  std::vector<StringLiteral> strings_;
  std::vector<LogicalLine> lines_;
};

bool is_identifier_char(char c);

}  // namespace codetool::detail
