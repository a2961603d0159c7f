#include "codetool/code_analysis.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "python_lexer.hpp"

namespace codetool {

using detail::ByteClass;
using detail::LexedSource;
using detail::LineKind;
using detail::LogicalLine;

namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n\f");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n\f");
  return std::string(s.substr(first, last - first + 1));
}

std::size_t line_number_at(std::string_view source, std::size_t offset) {
  return 1 + static_cast<std::size_t>(std::count(source.begin(), source.begin() + offset, '\n'));
}

const std::regex& def_header_regex() {
  static const std::regex re(R"(^(?:async[ \t]+)?def[ \t]+([A-Za-z_][A-Za-z0-9_]*)[ \t]*\()");
  return re;
}

const std::regex& main_guard_regex() {
  static const std::regex re(
      R"rx(^if[ \t]+(?:\(?[ \t]*__name__[ \t]*==[ \t]*(['"])__main__\1[ \t]*\)?|(['"])__main__\2[ \t]*==[ \t]*__name__)[ \t]*:)rx");
  return re;
}

struct TopDef {
  std::size_t line_index = 0;
  std::string name;
};

std::vector<TopDef> find_top_defs(const LexedSource& lex) {
  std::vector<TopDef> defs;
  const auto& lines = lex.lines();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.kind != LineKind::statement || line.indent != 0) continue;
    const std::string code = lex.code_text(line.first, line.end);
    std::smatch m;
    if (std::regex_search(code, m, def_header_regex())) defs.push_back({i, m[1].str()});
  }
  return defs;
}

std::optional<std::size_t> find_main_guard(const LexedSource& lex) {
  const auto& lines = lex.lines();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.kind != LineKind::statement || line.indent != 0) continue;
    const std::string code = lex.code_text(line.first, line.end);
    if (std::regex_search(code, main_guard_regex())) return i;
  }
  return std::nullopt;
}

bool invokes(std::string_view code, const std::string& name) {
  const std::regex call("(^|[^A-Za-z0-9_.])" + name + "[ \\t]*\\(");
  return std::regex_search(code.begin(), code.end(), call);
}

// Comma-separated segments of [begin, end) at bracket depth zero.
std::vector<ByteSpan> split_top_level(const LexedSource& lex, std::size_t begin, std::size_t end) {
  std::vector<ByteSpan> parts;
  const auto src = lex.source();
  int depth = 0;
  std::size_t seg = begin;
  for (std::size_t i = begin; i < end; ++i) {
    if (!lex.is_code(i)) continue;
    const char c = src[i];
    if (c == '(' || c == '[' || c == '{') {
      ++depth;
    } else if (c == ')' || c == ']' || c == '}') {
      --depth;
    } else if (c == ',' && depth == 0) {
      parts.push_back({seg, i});
      seg = i + 1;
    }
  }
  parts.push_back({seg, end});
  return parts;
}

// First code byte equal to `target` at depth zero inside [begin, end).
std::size_t find_top_level(const LexedSource& lex, std::size_t begin, std::size_t end, char target,
                           char not_followed_by = '\0') {
  const auto src = lex.source();
  int depth = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (!lex.is_code(i)) continue;
    const char c = src[i];
    if (c == '(' || c == '[' || c == '{') {
      ++depth;
    } else if (c == ')' || c == ']' || c == '}') {
      --depth;
    } else if (c == target && depth == 0) {
      if (not_followed_by != '\0' && i + 1 < end && src[i + 1] == not_followed_by) {
        ++i;
        continue;
      }
      if (target == '=' && i > begin && std::string_view("=!<>").find(src[i - 1]) != std::string_view::npos) {
        continue;
      }
      return i;
    }
  }
  return std::string_view::npos;
}

struct Header {
  std::string name;
  std::vector<ScaffoldParam> params;
  std::string return_annotation;
  std::size_t colon = std::string_view::npos;  // offset of the header's ':'
};

Header parse_def_header(const LexedSource& lex, const LogicalLine& line, const std::string& name) {
  Header h;
  h.name = name;
  const auto src = lex.source();
  std::size_t open = std::string_view::npos;
  for (std::size_t i = line.first; i < line.end; ++i) {
    if (lex.is_code(i) && src[i] == '(') {
      open = i;
      break;
    }
  }
  const std::size_t close = open == std::string_view::npos ? open : lex.match_bracket(open, line.end);
  if (close == std::string_view::npos) {
    throw ScaffoldError(ScaffoldErrorKind::no_function, "unbalanced parameter list for " + name);
  }
  for (const auto& seg : split_top_level(lex, open + 1, close)) {
    const std::string text = trim(src.substr(seg.start, seg.size()));
    if (text.empty() || text == "/" || text == "*") continue;
    const std::size_t colon = find_top_level(lex, seg.start, seg.end, ':');
    const std::size_t equals = find_top_level(lex, seg.start, seg.end, '=');
    const std::size_t name_end = std::min({colon, equals, seg.end});
    ScaffoldParam p;
    p.name = trim(src.substr(seg.start, name_end - seg.start));
    if (colon != std::string_view::npos && (equals == std::string_view::npos || colon < equals)) {
      const std::size_t ann_end = equals == std::string_view::npos ? seg.end : equals;
      p.annotation = trim(lex.code_text(colon + 1, ann_end));
    }
    h.params.push_back(std::move(p));
  }
  // `-> annotation :` after the parameter list
  const std::size_t colon = find_top_level(lex, close + 1, line.end, ':');
  if (colon == std::string_view::npos) {
    throw ScaffoldError(ScaffoldErrorKind::no_function, "function header of " + name + " lacks ':'");
  }
  h.colon = colon;
  const std::string between = trim(lex.code_text(close + 1, colon));
  if (between.rfind("->", 0) == 0) h.return_annotation = trim(between.substr(2));
  return h;
}

}  // namespace

// -- scaffold ---------------------------------------------------------------

Scaffold parse_scaffold(std::string_view source) {
  if (trim(source).empty()) {
    throw ScaffoldError(ScaffoldErrorKind::no_function, "source is empty");
  }
  const LexedSource lex(source);
  const auto& lines = lex.lines();
  const auto defs = find_top_defs(lex);
  if (defs.empty()) throw ScaffoldError(ScaffoldErrorKind::no_function, "no top-level def found");
  if (defs.size() > 1) {
    throw ScaffoldError(ScaffoldErrorKind::multiple_functions,
                        "found " + std::to_string(defs.size()) + " top-level functions ('" +
                            defs[0].name + "', '" + defs[1].name + "', ...)");
  }
  const auto& def = defs.front();
  const auto& header_line = lines[def.line_index];
  const Header header = parse_def_header(lex, header_line, def.name);

  Scaffold sc;
  sc.function_name = header.name;
  sc.params = header.params;
  sc.return_annotation = header.return_annotation;
  sc.raw_source = std::string(source);

  if (!trim(lex.code_text(header.colon + 1, header_line.end)).empty()) {
    throw ScaffoldError(ScaffoldErrorKind::missing_docstring,
                        "body of " + sc.function_name + " is on the header line");
  }

  std::size_t last_index = def.line_index;
  const std::size_t fn_end = lex.block_end(def.line_index, &last_index);

  // docstring: first statement of the body
  std::optional<std::size_t> doc_index;
  for (std::size_t i = def.line_index + 1; i <= last_index; ++i) {
    if (lines[i].kind == LineKind::statement) {
      doc_index = i;
      break;
    }
  }
  const detail::StringLiteral* doc = doc_index ? lex.string_at(lines[*doc_index].first) : nullptr;
  if (doc == nullptr || !doc->triple ||
      !trim(lex.code_text(doc->span.end, lines[*doc_index].end)).empty()) {
    throw ScaffoldError(ScaffoldErrorKind::missing_docstring,
                        sc.function_name + " has no triple-quoted docstring");
  }
  sc.docstring = std::string(source.substr(doc->content.start, doc->content.size()));

  for (std::size_t i = *doc_index + 1; i <= last_index; ++i) {
    const auto& line = lines[i];
    if (line.kind != LineKind::statement) continue;
    const std::string stmt = trim(lex.code_text(line.first, line.end));
    if (stmt != "pass" && stmt != "...") {
      throw ScaffoldError(ScaffoldErrorKind::non_empty_body,
                          "line " + std::to_string(line_number_at(source, line.first)) + ": " + stmt);
    }
  }
  const std::size_t body_start = lines[*doc_index].end;
  sc.body_source = std::string(source.substr(body_start, fn_end > body_start ? fn_end - body_start : 0));

  const auto guard = find_main_guard(lex);
  if (!guard) throw ScaffoldError(ScaffoldErrorKind::missing_main_guard, "no main guard");
  const std::size_t guard_end = lex.block_end(*guard);
  sc.main_guard_source = std::string(source.substr(lines[*guard].start, guard_end - lines[*guard].start));
  if (!invokes(lex.code_text(lines[*guard].start, guard_end), sc.function_name)) {
    throw ScaffoldError(ScaffoldErrorKind::missing_main_guard,
                        "main guard does not call " + sc.function_name);
  }

  for (const auto& p : sc.params) {
    std::string bare = p.name;
    bare.erase(0, bare.find_first_not_of('*'));
    if (sc.docstring.find(bare) == std::string::npos) {
      throw ScaffoldError(ScaffoldErrorKind::missing_docstring,
                          "docstring does not describe parameter '" + bare + "'");
    }
  }
  return sc;
}

std::string render_scaffold(const Scaffold& scaffold) { return scaffold.raw_source; }

SubtaskPlan embed_subtasks(const Scaffold& scaffold, const std::vector<std::string>& subtasks) {
  SubtaskPlan plan;
  for (const auto& raw : subtasks) {
    std::string flat;
    for (char c : raw) flat += (c == '\n' || c == '\r' || c == '\t') ? ' ' : c;
    static const std::regex spaces(" {2,}");
    flat = trim(std::regex_replace(flat, spaces, " "));
    if (!flat.empty()) plan.subtasks.push_back(std::move(flat));
  }
  if (plan.subtasks.empty()) throw ValidationError("no non-blank subtasks to embed");

  const std::string& src = scaffold.raw_source;
  const LexedSource lex(src);
  const auto& lines = lex.lines();
  const auto defs = find_top_defs(lex);
  if (defs.empty()) throw ValidationError("scaffold source has no function");
  std::size_t doc_index = defs.front().line_index;
  for (std::size_t i = doc_index + 1; i < lines.size(); ++i) {
    if (lines[i].kind == LineKind::statement) {
      doc_index = i;
      break;
    }
  }
  const auto& doc_line = lines[doc_index];
  const std::string indent = src.substr(doc_line.start, doc_line.first - doc_line.start);

  std::string insertion;
  if (doc_line.end == src.size() && (src.empty() || src.back() != '\n')) insertion += '\n';
  for (std::size_t k = 0; k < plan.subtasks.size(); ++k) {
    insertion += indent + "# Step " + std::to_string(k + 1) + ". " + plan.subtasks[k] + "\n";
  }
  plan.annotated_source = src.substr(0, doc_line.end) + insertion + src.substr(doc_line.end);
  return plan;
}

std::vector<StepComment> parse_step_comments(std::string_view text) {
  static const std::regex step(
      R"(^[ \t]*(?:#+[ \t]*)?(?:[-*][ \t]*)?(?:\*\*)?[Ss]tep[ \t]*(\d+)[ \t]*(?:\*\*)?[ \t]*[.:)\-]?[ \t]*(.*?)[ \t\r]*$)");
  std::vector<StepComment> steps;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    std::smatch m;
    if (std::regex_match(line, m, step) && !trim(m[2].str()).empty()) {
      steps.push_back({std::stoi(m[1].str()), trim(m[2].str())});
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return steps;
}

// -- call sites --------------------------------------------------------------

std::vector<CallSite> extract_call_sites(std::string_view source) {
  const LexedSource lex(source);
  const auto token = LexGrammar::call_api_token;
  std::vector<CallSite> sites;
  std::size_t pos = 0;
  while ((pos = source.find(token, pos)) != std::string_view::npos) {
    const std::size_t start = pos;
    const std::size_t after = pos + token.size();
    pos = after;
    if (!lex.is_code(start)) continue;
    if (start > 0 && detail::is_identifier_char(source[start - 1])) continue;
    if (after < source.size() && detail::is_identifier_char(source[after])) continue;
    // skip the placeholder's own definition
    std::size_t back = start;
    while (back > 0 && (source[back - 1] == ' ' || source[back - 1] == '\t')) --back;
    if (back >= 3 && source.substr(back - 3, 3) == "def" &&
        (back == 3 || !detail::is_identifier_char(source[back - 4]))) {
      continue;
    }
    std::size_t open = after;
    while (open < source.size() && (source[open] == ' ' || source[open] == '\t')) ++open;
    if (open >= source.size() || source[open] != '(') continue;
    const std::size_t close = lex.match_bracket(open, source.size());
    if (close == std::string_view::npos) {
      throw UnterminatedCall("call_api at line " + std::to_string(line_number_at(source, start)) +
                             " is never closed");
    }

    std::optional<std::string> path;
    std::string params;
    std::vector<std::string> positional;
    for (const auto& seg : split_top_level(lex, open + 1, close)) {
      auto blank = [&](std::size_t i) {
        return std::isspace(static_cast<unsigned char>(source[i])) || lex.at(i) == detail::ByteClass::comment;
      };
      std::size_t b = seg.start;
      while (b < seg.end && blank(b)) ++b;
      std::size_t e = seg.end;
      while (e > b && blank(e - 1)) --e;
      if (b >= e) continue;
      std::size_t id_end = b;
      while (id_end < e && detail::is_identifier_char(source[id_end])) ++id_end;
      std::size_t eq = id_end;
      while (eq < e && (source[eq] == ' ' || source[eq] == '\t')) ++eq;
      const bool keyword = id_end > b && eq < e && source[eq] == '=' &&
                           (eq + 1 >= e || source[eq + 1] != '=');
      if (!keyword) {
        positional.emplace_back(source.substr(b, e - b));
        continue;
      }
      const std::string name(source.substr(b, id_end - b));
      std::size_t v = eq + 1;
      while (v < e && std::isspace(static_cast<unsigned char>(source[v]))) ++v;
      if (name == "api_path") {
        const auto* lit = lex.string_at(v);
        if (lit != nullptr && lit->span.end == e) {
          path = std::string(source.substr(lit->content.start, lit->content.size()));
        }
      } else if (name == "params") {
        params = std::string(source.substr(v, e - v));
      }
    }
    if (path && !path->empty()) {
      if (params.empty() && !positional.empty()) params = positional.front();
      sites.push_back({*path, params, {start, close + 1}});
    }
    // nested placeholders inside this call are not reported separately
    pos = close + 1;
  }
  return sites;
}

// -- sub-functions -----------------------------------------------------------

std::vector<std::string> top_level_functions(std::string_view source) {
  const LexedSource lex(source);
  std::vector<std::string> names;
  for (const auto& d : find_top_defs(lex)) names.push_back(d.name);
  return names;
}

std::vector<SubFunction> extract_sub_functions(std::string_view source, const Toolbox& toolbox,
                                               std::optional<std::string> main_function) {
  const LexedSource lex(source);
  const auto& lines = lex.lines();
  const auto defs = find_top_defs(lex);

  if (!main_function) {
    if (const auto guard = find_main_guard(lex)) {
      const std::string guard_code = lex.code_text(lines[*guard].start, lex.block_end(*guard));
      for (const auto& d : defs) {
        if (invokes(guard_code, d.name)) {
          main_function = d.name;
          break;
        }
      }
    }
  }

  std::vector<SubFunction> out;
  for (const auto& d : defs) {
    if (main_function && d.name == *main_function) continue;
    std::size_t first = d.line_index;
    while (first > 0) {
      const auto& prev = lines[first - 1];
      if (prev.kind == LineKind::statement && prev.indent == 0 && source[prev.first] == '@') {
        --first;
      } else {
        break;
      }
    }
    SubFunction fn;
    fn.name = d.name;
    fn.span = {lines[first].start, lex.block_end(d.line_index)};

    // (a) explicit marker on the nearest non-blank line above
    std::size_t above = first;
    while (above > 0 && lines[above - 1].kind == LineKind::blank) --above;
    if (above > 0 && lines[above - 1].kind == LineKind::comment) {
      const std::string text = trim(lex.line_text(lines[above - 1]));
      const auto marker = LexGrammar::api_path_marker;
      if (text.rfind(marker, 0) == 0) {
        const std::string path = trim(std::string_view(text).substr(marker.size()));
        if (toolbox.contains(path)) fn.api_path = path;
      }
    }

    // (b) exactly one toolbox template inside the function's string literals
    if (!fn.api_path) {
      std::set<std::string> found;
      for (const auto& lit : lex.strings()) {
        if (lit.span.start < fn.span.start || lit.span.end > fn.span.end) continue;
        const auto content = source.substr(lit.content.start, lit.content.size());
        for (const auto& tool : toolbox.tools()) {
          const auto& p = tool.api_path;
          for (auto at = content.find(p); at != std::string_view::npos; at = content.find(p, at + 1)) {
            const std::size_t tail = at + p.size();
            if (tail == content.size() || content[tail] == '?' || content[tail] == '#') {
              found.insert(p);
              break;
            }
          }
        }
      }
      if (found.size() == 1) fn.api_path = *found.begin();
    }
    out.push_back(std::move(fn));
  }
  return out;
}

// -- fenced blocks -----------------------------------------------------------

std::string extract_code_block(std::string_view text) {
  struct Block {
    std::string body;
  };
  std::vector<Block> blocks;
  std::size_t pos = 0;
  bool inside = false;
  std::string current;
  bool any_fence = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const std::string t = trim(line);
    if (t.rfind("```", 0) == 0) {
      any_fence = true;
      if (inside) {
        blocks.push_back({current});
        current.clear();
      }
      inside = !inside;
    } else if (inside) {
      current += std::string(line) + "\n";
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (inside) blocks.push_back({current});
  if (!any_fence || blocks.empty()) return std::string(text);
  for (const auto& b : blocks) {
    if (!top_level_functions(b.body).empty()) return b.body;
  }
  return blocks.front().body;
}

}  // namespace codetool
