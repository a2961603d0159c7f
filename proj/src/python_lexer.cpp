#include "python_lexer.hpp"

#include <algorithm>
#include <cctype>

namespace codetool::detail {

bool is_identifier_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

namespace {

bool is_prefix_char(char c) {
  switch (c) {
    case 'r': case 'R': case 'b': case 'B': case 'f': case 'F': case 'u': case 'U':
      return true;
    default:
      return false;
  }
}

// Length of a string prefix (0-2 letters) followed by a quote at `i`, or -1.
int string_prefix_length(std::string_view s, std::size_t i) {
  if (i > 0 && is_identifier_char(s[i - 1])) return -1;
  for (int len = 0; len <= 2; ++len) {
    const std::size_t q = i + static_cast<std::size_t>(len);
    if (q >= s.size()) return -1;
    if (s[q] == '\'' || s[q] == '"') return len;
    if (!is_prefix_char(s[q])) return -1;
  }
  return -1;
}

}  // namespace

LexedSource::LexedSource(std::string_view source)
    : source_(source), classes_(source.size(), ByteClass::code) {
  const std::string_view s = source_;
  const std::size_t n = s.size();

  // Pass 1: classify bytes.
  std::size_t i = 0;
  while (i < n) {
    const char c = s[i];
    if (c == '#') {
      while (i < n && s[i] != '\n') classes_[i++] = ByteClass::comment;
      continue;
    }
    const int plen = (c == '\'' || c == '"' || is_prefix_char(c)) ? string_prefix_length(s, i) : -1;
    if (plen < 0) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::size_t q = i + static_cast<std::size_t>(plen);
    const char quote = s[q];
    const bool triple = q + 2 < n && s[q + 1] == quote && s[q + 2] == quote;
    const std::size_t delim = triple ? 3 : 1;
    const std::size_t content_start = q + delim;
    std::size_t j = content_start;
    std::size_t content_end = n;
    std::size_t end = n;
    while (j < n) {
      if (s[j] == '\\') {  // raw literals cannot end on an escaped quote either
        j += 2;
        continue;
      }
      if (!triple && s[j] == '\n') {  // unterminated single-line literal
        content_end = j;
        end = j;
        break;
      }
      if (s[j] == quote && (!triple || (j + 2 < n && s[j + 1] == quote && s[j + 2] == quote))) {
        content_end = j;
        end = j + delim;
        break;
      }
      ++j;
    }
    end = std::min(end, n);
    content_end = std::min(content_end, n);
    for (std::size_t k = start; k < end; ++k) classes_[k] = ByteClass::string;
    strings_.push_back({{start, end}, {content_start, std::max(content_start, content_end)}, triple});
    i = end;
  }

  // Pass 2: logical lines.
  int depth = 0;
  std::size_t line_start = 0;
  auto finish_line = [&](std::size_t end) {
    LogicalLine line;
    line.start = line_start;
    line.end = end;
    int col = 0;
    std::size_t k = line_start;
    for (; k < end; ++k) {
      if (s[k] == ' ') {
        ++col;
      } else if (s[k] == '\t') {
        col = (col / 8 + 1) * 8;
      } else if (s[k] == '\f' || s[k] == '\r') {
        continue;
      } else {
        break;
      }
    }
    line.first = k;
    line.indent = col;
    if (k >= end || s[k] == '\n') {
      line.kind = LineKind::blank;
    } else if (classes_[k] == ByteClass::comment) {
      line.kind = LineKind::comment;
    } else {
      line.kind = LineKind::statement;
    }
    lines_.push_back(line);
    line_start = end;
  };

  for (std::size_t k = 0; k < n; ++k) {
    if (classes_[k] != ByteClass::code) continue;
    const char c = s[k];
    if (c == '(' || c == '[' || c == '{') {
      ++depth;
    } else if (c == ')' || c == ']' || c == '}') {
      depth = std::max(0, depth - 1);
    } else if (c == '\n') {
      std::size_t p = k;
      while (p > line_start && s[p - 1] == '\r') --p;
      const bool continued = p > line_start && s[p - 1] == '\\' && classes_[p - 1] == ByteClass::code;
      if (depth == 0 && !continued) finish_line(k + 1);
    }
  }
  if (line_start < n) finish_line(n);
}

const StringLiteral* LexedSource::string_at(std::size_t offset) const {
  auto it = std::lower_bound(strings_.begin(), strings_.end(), offset,
                             [](const StringLiteral& lit, std::size_t off) {
                               return lit.span.start < off;
                             });
  if (it != strings_.end() && it->span.start == offset) return &*it;
  return nullptr;
}

std::string LexedSource::code_text(std::size_t begin, std::size_t end) const {
  std::string out;
  end = std::min(end, source_.size());
  for (std::size_t i = begin; i < end; ++i) {
    if (classes_[i] != ByteClass::comment) out += source_[i];
  }
  return out;
}

std::string_view LexedSource::line_text(const LogicalLine& line) const {
  auto text = source_.substr(line.start, line.end - line.start);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
  return text;
}

std::size_t LexedSource::match_bracket(std::size_t open, std::size_t limit) const {
  limit = std::min(limit, source_.size());
  std::vector<char> stack;
  for (std::size_t i = open; i < limit; ++i) {
    if (classes_[i] != ByteClass::code) continue;
    const char c = source_[i];
    if (c == '(' || c == '[' || c == '{') {
      stack.push_back(c);
    } else if (c == ')' || c == ']' || c == '}') {
      const char want = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (stack.empty() || stack.back() != want) return std::string_view::npos;
      stack.pop_back();
      if (stack.empty()) return i;
    }
  }
  return std::string_view::npos;
}

std::size_t LexedSource::block_end(std::size_t header_index, std::size_t* last_line_index) const {
  const auto& header = lines_.at(header_index);
  std::size_t end = header.end;
  std::size_t last = header_index;
  for (std::size_t i = header_index + 1; i < lines_.size(); ++i) {
    const auto& line = lines_[i];
    if (line.kind == LineKind::blank) continue;
    if (line.indent <= header.indent) {
      if (line.kind == LineKind::statement) break;
      continue;  // dedented comment: not part of the block
    }
    end = line.end;
    last = i;
  }
  if (last_line_index) *last_line_index = last;
  return end;
}

}  // namespace codetool::detail
