// Canned guest runner for tests. Instead of interpreting the program it
// follows `# stub: <directive>` comment lines in file order and prints one
// result document on stdout, the same protocol a real runner speaks.
//
//   stdout <text>                  append a line to captured stdout
//   echo-env <VAR>                 append "VAR=<value>"
//   get <path?query>               GET $BASE_URL<path> with the bearer token;
//                                  status >= 400 raises HTTPError
//   count <path> <array> <k>=<v> <prefix...>
//                                  GET, count elements of body[array] with
//                                  elem[k] == v, append "<prefix> <n>"
//   frame <func> <line>            push a callee frame for the next raise
//   raise <Type> <message>         exception document; frames are the pushed
//                                  ones, or a module frame at this line
//   doc <json>                     print the JSON verbatim and exit 0
//   garbage                        print a non-JSON line and exit 0
//   exit <n>                       exit with code n, no document
//   sleep-ms <n>                   sleep
//   spawn-sleeper <pidfile>        fork a 30 s sleeper, write its pid
//
// With no directives at all, captured stdout is $STUB_STDOUT.

#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace {

using Json = nlohmann::json;

struct Frame {
  std::string func;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string word(std::string& rest) {
  rest = trim(rest);
  const auto sp = rest.find(' ');
  std::string w = rest.substr(0, sp);
  rest = sp == std::string::npos ? "" : trim(rest.substr(sp + 1));
  return w;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

struct Stub {
  std::string program_path;
  std::vector<std::string> lines;
  std::string out;
  std::vector<Frame> pending;

  int finish_ok() {
    std::cout << Json{{"status", "ok"}, {"stdout", out}, {"duration_ms", 0}}.dump() << "\n";
    return 0;
  }

  int raise(int line_no, const std::string& type, const std::string& message) {
    Json frames = Json::array();
    if (pending.empty()) pending.push_back({"<module>", line_no});
    for (const auto& f : pending) {
      const std::string code = f.line >= 1 && f.line <= static_cast<int>(lines.size()) ? trim(lines[f.line - 1]) : "";
      frames.push_back({{"file", program_path}, {"line", f.line}, {"func", f.func}, {"code", code}});
    }
    Json doc{{"status", "exception"},
             {"stdout", out},
             {"exception", {{"type", type}, {"message", message}, {"frames", frames}}},
             {"duration_ms", 0}};
    std::cout << doc.dump() << "\n";
    return 0;
  }

  // Returns the body, or nullopt after emitting an HTTPError document.
  std::optional<std::string> fetch(int line_no, const std::string& path, int& rc) {
    const std::string base = env_or("BASE_URL", "");
    if (base.empty()) {
      rc = raise(line_no, "ConnectionError", "BASE_URL is not set");
      return std::nullopt;
    }
    httplib::Client client(base);
    client.set_connection_timeout(5);
    httplib::Headers headers;
    const std::string token = env_or("TOOL_API_TOKEN", "");
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Get(path, headers);
    if (!res) {
      rc = raise(line_no, "ConnectionError", "request to " + path + " failed");
      return std::nullopt;
    }
    if (res->status >= 400) {
      rc = raise(line_no, "HTTPError", std::to_string(res->status) + " Error for url: " + path);
      return std::nullopt;
    }
    return res->body;
  }

  int run() {
    bool any = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const int line_no = static_cast<int>(i) + 1;
      const std::string line = trim(lines[i]);
      static const std::string marker = "# stub:";
      if (line.rfind(marker, 0) != 0) continue;
      any = true;
      std::string rest = line.substr(marker.size());
      const std::string op = word(rest);
      if (op == "stdout") {
        out += rest + "\n";
      } else if (op == "echo-env") {
        out += rest + "=" + env_or(rest.c_str(), "") + "\n";
      } else if (op == "get") {
        int rc = 0;
        if (!fetch(line_no, rest, rc)) return rc;
      } else if (op == "count") {
        const std::string path = word(rest);
        const std::string array = word(rest);
        const std::string cond = word(rest);
        const auto eq = cond.find('=');
        int rc = 0;
        const auto body = fetch(line_no, path, rc);
        if (!body) return rc;
        const Json doc = Json::parse(*body, nullptr, false);
        if (doc.is_discarded() || !doc.contains(array)) return raise(line_no, "KeyError", "'" + array + "'");
        int n = 0;
        for (const auto& e : doc[array]) {
          if (e.value(cond.substr(0, eq), std::string()) == cond.substr(eq + 1)) ++n;
        }
        out += rest + " " + std::to_string(n) + "\n";
      } else if (op == "frame") {
        Frame f;
        f.func = word(rest);
        f.line = std::atoi(rest.c_str());
        pending.push_back(f);
      } else if (op == "raise") {
        const std::string type = word(rest);
        return raise(line_no, type, rest);
      } else if (op == "doc") {
        std::cout << rest << "\n";
        return 0;
      } else if (op == "garbage") {
        std::cout << "this is not a result document\n";
        return 0;
      } else if (op == "exit") {
        std::cerr << "stub runner exiting with " << rest << "\n";
        return std::atoi(rest.c_str());
      } else if (op == "sleep-ms") {
        std::this_thread::sleep_for(std::chrono::milliseconds(std::atoi(rest.c_str())));
      } else if (op == "spawn-sleeper") {
        std::cout.flush();
        const pid_t child = ::fork();
        if (child == 0) {
          ::sleep(30);
          ::_exit(0);
        }
        std::ofstream(rest) << child << "\n";
      } else {
        std::cerr << "unknown stub directive '" << op << "'\n";
        return 3;
      }
    }
    if (!any) out = env_or("STUB_STDOUT", "");
    return finish_ok();
  }
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: stub_runner <program>\n";
    return 2;
  }
  Stub stub;
  stub.program_path = argv[1];
  std::ifstream in(stub.program_path);
  if (!in) {
    std::cerr << "cannot read " << stub.program_path << "\n";
    return 2;
  }
  for (std::string line; std::getline(in, line);) stub.lines.push_back(line);
  return stub.run();
}
