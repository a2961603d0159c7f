#include "codetool/mock_world.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "codetool/function_repo.hpp"

namespace codetool {

// -- fixture ------------------------------------------------------------------

void to_json(Json& j, const ErrorInjection& v) { j = Json{{"status", v.status}, {"times", v.times}}; }

void from_json(const Json& j, ErrorInjection& v) {
  v.status = j.value("status", 500);
  v.times = j.value("times", 1);
}

void to_json(Json& j, const Route& v) {
  j = Json{{"method", v.method}, {"path_template", v.path_template}, {"params", v.params},
           {"status", v.status}, {"body", v.body}};
  if (v.error_injection) j["error_injection"] = *v.error_injection;
}

void from_json(const Json& j, Route& v) {
  v.method = j.value("method", std::string("GET"));
  std::transform(v.method.begin(), v.method.end(), v.method.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  j.at("path_template").get_to(v.path_template);
  v.params.clear();
  if (j.contains("params")) {
    for (const auto& [k, val] : j["params"].items()) {
      v.params[k] = val.is_string() ? val.get<std::string>() : val.dump();
    }
  }
  v.status = j.value("status", 200);
  v.body = j.value("body", Json::object());
  v.error_injection.reset();
  if (j.contains("error_injection") && !j["error_injection"].is_null()) {
    v.error_injection = j["error_injection"].get<ErrorInjection>();
  }
}

void to_json(Json& j, const WorldFixture& v) {
  j = Json{{"format_version", kFormatVersion}, {"routes", v.routes}};
  if (v.auth_token) j["auth_token"] = *v.auth_token;
}

void from_json(const Json& j, WorldFixture& v) {
  if (j.value("format_version", kFormatVersion) != kFormatVersion) {
    throw FixtureError("unsupported fixture format_version");
  }
  v.auth_token.reset();
  if (j.contains("auth_token") && !j["auth_token"].is_null()) v.auth_token = j["auth_token"].get<std::string>();
  j.at("routes").get_to(v.routes);
}

namespace {

std::vector<std::string_view> split_segments(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto slash = path.find('/', pos);
    out.push_back(path.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos));
    if (slash == std::string_view::npos) break;
    pos = slash + 1;
  }
  return out;
}

std::optional<std::string_view> param_name(std::string_view segment) {
  if (segment.size() > 2 && segment.front() == '{' && segment.back() == '}') {
    return segment.substr(1, segment.size() - 2);
  }
  return std::nullopt;
}

// Value a segment is pinned to, or nullopt when it accepts anything.
std::optional<std::string> segment_constraint(const Route& route, std::string_view segment) {
  if (auto name = param_name(segment)) {
    auto it = route.params.find(std::string(*name));
    if (it == route.params.end() || it->second == kWildcard) return std::nullopt;
    return it->second;
  }
  return std::string(segment);
}

bool may_overlap(const Route& a, const Route& b) {
  if (a.method != b.method) return false;
  const auto sa = split_segments(a.path_template);
  const auto sb = split_segments(b.path_template);
  if (sa.size() != sb.size()) return false;
  std::vector<std::string> path_bound;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const auto ca = segment_constraint(a, sa[i]);
    const auto cb = segment_constraint(b, sb[i]);
    if (ca && cb && *ca != *cb) return false;
    if (auto n = param_name(sa[i])) path_bound.emplace_back(*n);
    if (auto n = param_name(sb[i])) path_bound.emplace_back(*n);
  }
  for (const auto& [key, va] : a.params) {
    if (std::find(path_bound.begin(), path_bound.end(), key) != path_bound.end()) continue;
    auto it = b.params.find(key);
    if (it == b.params.end()) continue;
    if (va != kWildcard && it->second != kWildcard && va != it->second) return false;
  }
  return true;
}

}  // namespace

void check_overlaps(const std::vector<Route>& routes) {
  for (std::size_t i = 0; i < routes.size(); ++i) {
    if (routes[i].path_template.empty() || routes[i].path_template.front() != '/') {
      throw FixtureError("route path must start with '/': '" + routes[i].path_template + "'");
    }
    for (std::size_t j = i + 1; j < routes.size(); ++j) {
      if (may_overlap(routes[i], routes[j])) {
        throw FixtureError("routes " + std::to_string(i) + " and " + std::to_string(j) + " overlap: " +
                           routes[i].method + " " + routes[i].path_template);
      }
    }
  }
}

WorldFixture parse_fixture(std::string_view text) {
  WorldFixture fixture;
  try {
    fixture = Json::parse(text).get<WorldFixture>();
  } catch (const Json::exception& e) {
    throw FixtureError(std::string("malformed fixture: ") + e.what());
  }
  check_overlaps(fixture.routes);
  return fixture;
}

WorldFixture load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot read fixture " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_fixture(buffer.str());
}

std::optional<std::map<std::string, std::string>> match_path(std::string_view path_template,
                                                             std::string_view path) {
  const auto t = split_segments(path_template);
  const auto p = split_segments(path);
  if (t.size() != p.size()) return std::nullopt;
  std::map<std::string, std::string> bound;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (auto name = param_name(t[i])) {
      if (p[i].empty()) return std::nullopt;
      bound[std::string(*name)] = std::string(p[i]);
    } else if (t[i] != p[i]) {
      return std::nullopt;
    }
  }
  return bound;
}

// -- server -------------------------------------------------------------------

MockWorld::MockWorld(WorldFixture fixture) : fixture_(std::move(fixture)) {
  check_overlaps(fixture_.routes);
  injected_.assign(fixture_.routes.size(), 0);
}

MockWorld::~MockWorld() { stop(); }

WorldResponse MockWorld::handle(std::string_view method, std::string_view path,
                                const std::map<std::string, std::string>& query,
                                const std::optional<std::string>& authorization) {
  std::lock_guard lock(mutex_);
  RequestRecord record;
  record.method = std::string(method);
  record.path = std::string(path);
  record.params = query;
  record.timestamp = now_ms();

  std::optional<std::size_t> hit;
  for (std::size_t i = 0; i < fixture_.routes.size() && !hit; ++i) {
    const auto& route = fixture_.routes[i];
    if (route.method != method) continue;
    auto bound = match_path(route.path_template, path);
    if (!bound) continue;
    bool ok = true;
    for (const auto& [key, expected] : route.params) {
      std::optional<std::string> actual;
      if (auto it = bound->find(key); it != bound->end()) {
        actual = it->second;
      } else if (auto q = query.find(key); q != query.end()) {
        actual = q->second;
      }
      if (!actual || (expected != kWildcard && *actual != expected)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    hit = i;
    record.matched = true;
    record.path = route.path_template;
    for (auto& [k, v] : *bound) record.params[k] = v;
  }

  WorldResponse response;
  if (fixture_.auth_token && authorization != "Bearer " + *fixture_.auth_token) {
    response.status = 401;
    response.body = R"({"status_code":7,"status_message":"Invalid API key: You must be granted a valid key."})";
  } else if (!hit) {
    response.status = 404;
  } else {
    const auto& route = fixture_.routes[*hit];
    if (route.error_injection && injected_[*hit] < route.error_injection->times) {
      ++injected_[*hit];
      response.status = route.error_injection->status;
      response.body = R"({"status_message":"injected failure"})";
    } else {
      response.status = route.status;
      response.body = route.body.dump();
    }
  }
  record.status = response.status;
  log_.push_back(std::move(record));
  return response;
}

std::string MockWorld::serve() {
  if (server_) return base_url_;
  server_ = std::make_unique<httplib::Server>();
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    std::optional<std::string> auth;
    if (req.has_header("Authorization")) auth = req.get_header_value("Authorization");
    const auto r = handle(req.method, req.path, query, auth);
    res.status = r.status;
    if (!r.body.empty()) res.set_content(r.body, "application/json");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Put(".*", handler);
  server_->Delete(".*", handler);
  server_->Patch(".*", handler);

  const int port = server_->bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    server_.reset();
    throw BindError("cannot bind a loopback port");
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  base_url_ = "http://127.0.0.1:" + std::to_string(port);
  return base_url_;
}

void MockWorld::stop() {
  if (!server_) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

std::vector<RequestRecord> MockWorld::drain_log() {
  std::lock_guard lock(mutex_);
  std::vector<RequestRecord> out;
  out.swap(log_);
  return out;
}

std::size_t MockWorld::log_size() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

}  // namespace codetool
