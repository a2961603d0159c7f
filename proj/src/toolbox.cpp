#include "codetool/toolbox.hpp"

#include <fstream>
#include <sstream>

namespace codetool {

Toolbox parse_toolbox(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("toolbox is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("tools") || !doc["tools"].is_array()) {
    throw ParseError("toolbox must be an object with a 'tools' array");
  }
  if (doc.value("format_version", kFormatVersion) != kFormatVersion) {
    throw ParseError("unsupported toolbox format_version");
  }
  if (doc["tools"].empty()) throw ParseError("toolbox has no tools");

  std::vector<ToolDoc> tools;
  try {
    tools = doc["tools"].get<std::vector<ToolDoc>>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed tool entry: ") + e.what());
  }
  try {
    return Toolbox(std::move(tools));
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
}

Toolbox load_toolbox(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read toolbox file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_toolbox(buffer.str());
}

std::vector<ToolDoc> augment_with_repo(const std::vector<ToolDoc>& docs, const RepoSnapshot& repo) {
  std::vector<ToolDoc> out = docs;
  for (auto& doc : out) {
    if (auto it = repo.find(doc.api_path); it != repo.end()) {
      doc.reusable_code = it->second.source;
    }
  }
  return out;
}

std::vector<ToolDoc> augment_with_repo(const std::vector<ToolDoc>& docs,
                                       const FunctionRepository& repo) {
  return augment_with_repo(docs, repo.snapshot());
}

std::string render_tool_index(const Toolbox& toolbox) {
  std::string out;
  for (const auto& tool : toolbox.tools()) {
    out += tool.method + " " + tool.api_path + ": " + tool.description + "\n";
  }
  return out;
}

std::string render_tool_catalog(const Toolbox& toolbox) {
  std::string out;
  for (const auto& tool : toolbox.tools()) {
    out += tool.method + " " + tool.api_path + ": " + tool.description + "\n";
    for (const auto& p : tool.parameters) {
      out += "    - " + p.name + " (" + p.type + (p.required ? ", required" : ", optional") + ")";
      if (!p.description.empty()) out += ": " + p.description;
      out += "\n";
    }
  }
  return out;
}

std::string render_api_docs(const std::vector<ToolDoc>& docs) {
  Json arr = Json::array();
  for (const auto& doc : docs) arr.push_back(doc);
  return arr.dump(2);
}

}  // namespace codetool
