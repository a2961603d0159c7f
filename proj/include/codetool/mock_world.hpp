#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "codetool/model.hpp"

namespace httplib {
class Server;
}

namespace codetool {

inline constexpr std::string_view kWildcard = "*";

struct ErrorInjection {
  int status = 500;
  int times = 1;  // the first `times` matching requests fail

  bool operator==(const ErrorInjection&) const = default;
};

struct Route {
  std::string method = "GET";
  std::string path_template;
  /// Query parameters or bound path segments; "*" requires presence only.
  std::map<std::string, std::string> params;
  int status = 200;
  Json body = Json::object();
  std::optional<ErrorInjection> error_injection;

  bool operator==(const Route&) const = default;
};

struct WorldFixture {
  std::optional<std::string> auth_token;
  std::vector<Route> routes;

  bool operator==(const WorldFixture&) const = default;
};

void to_json(Json& j, const ErrorInjection& v);
void from_json(const Json& j, ErrorInjection& v);
void to_json(Json& j, const Route& v);
void from_json(const Json& j, Route& v);
void to_json(Json& j, const WorldFixture& v);
void from_json(const Json& j, WorldFixture& v);

/// Throws FixtureError for malformed input or overlapping routes.
WorldFixture parse_fixture(std::string_view text);
WorldFixture load_fixture(const std::filesystem::path& path);

/// Throws FixtureError naming the first pair of routes some request could
/// match both of.
void check_overlaps(const std::vector<Route>& routes);

/// Binds `{name}` segments of `path_template` against a concrete path.
std::optional<std::map<std::string, std::string>> match_path(std::string_view path_template,
                                                             std::string_view path);

/// Source of the requests a program made while it ran.
class RequestLogSource {
 public:
  virtual ~RequestLogSource() = default;
  /// Returns and clears the log atomically.
  virtual std::vector<RequestRecord> drain_log() = 0;
};

struct WorldResponse {
  int status = 200;
  std::string body;  // empty for 404
};

/// Loopback HTTP server answering from a fixture.
class MockWorld : public RequestLogSource {
 public:
  /// Validates the fixture (FixtureError on overlap).
  explicit MockWorld(WorldFixture fixture);
  ~MockWorld() override;

  MockWorld(const MockWorld&) = delete;
  MockWorld& operator=(const MockWorld&) = delete;

  /// Starts listening on 127.0.0.1 with an ephemeral port and returns the
  /// base URL. Throws BindError.
  std::string serve();
  void stop();
  const std::string& base_url() const noexcept { return base_url_; }

  /// Routing, auth and logging without the socket. `authorization` is the
  /// raw header value, absent when the header was not sent.
  WorldResponse handle(std::string_view method, std::string_view path,
                       const std::map<std::string, std::string>& query,
                       const std::optional<std::string>& authorization);

  std::vector<RequestRecord> drain_log() override;
  std::size_t log_size() const;

 private:
  WorldFixture fixture_;
  std::vector<int> injected_;  // failures served per route
  mutable std::mutex mutex_;
  std::vector<RequestRecord> log_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string base_url_;
};

}  // namespace codetool
