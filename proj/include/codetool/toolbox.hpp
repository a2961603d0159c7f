#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "codetool/function_repo.hpp"
#include "codetool/model.hpp"

namespace codetool {

/// Reads a toolbox document `{"format_version":1,"tools":[...]}`.
/// Throws ParseError for malformed or empty files, DuplicatePath when two
/// entries share an api_path.
Toolbox load_toolbox(const std::filesystem::path& path);
Toolbox parse_toolbox(std::string_view text);

/// Copies `docs`, attaching reusable_code from the newest repository entry
/// for each path that has one. Order is preserved.
std::vector<ToolDoc> augment_with_repo(const std::vector<ToolDoc>& docs, const RepoSnapshot& repo);
std::vector<ToolDoc> augment_with_repo(const std::vector<ToolDoc>& docs,
                                       const FunctionRepository& repo);

// Prompt renderings of tool documentation.

/// One line per tool: `GET /3/search/person: <description>`.
std::string render_tool_index(const Toolbox& toolbox);

/// Tool list with parameter details, for the selection and reformulation stages.
std::string render_tool_catalog(const Toolbox& toolbox);

/// Selected docs as a pretty-printed JSON array, `reusable_code` included
/// when present.
std::string render_api_docs(const std::vector<ToolDoc>& docs);

}  // namespace codetool
