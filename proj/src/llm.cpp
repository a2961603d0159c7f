#include "codetool/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace codetool {

// -- transcript ---------------------------------------------------------------

void to_json(Json& j, const TranscriptEntry& v) {
  j = Json{{"stage", v.stage}, {"response", v.response}};
  if (!v.must_contain.empty()) j["must_contain"] = v.must_contain;
}

void from_json(const Json& j, TranscriptEntry& v) {
  j.at("stage").get_to(v.stage);
  j.at("response").get_to(v.response);
  v.must_contain = j.value("must_contain", std::vector<std::string>{});
}

void to_json(Json& j, const Transcript& v) { j = Json{{"entries", v.entries}}; }

void from_json(const Json& j, Transcript& v) { j.at("entries").get_to(v.entries); }

Transcript parse_transcript(std::string_view text) {
  try {
    return Json::parse(text).get<Transcript>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed transcript: ") + e.what());
  }
}

Transcript load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read transcript " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_transcript(buffer.str());
}

// -- scripted -----------------------------------------------------------------

ScriptedModel::ScriptedModel(Transcript transcript) : transcript_(std::move(transcript)) {}

std::string ScriptedModel::complete(Stage stage, std::string_view prompt) {
  std::lock_guard lock(mutex_);
  if (next_ >= transcript_.entries.size()) {
    throw TranscriptExhausted(std::string("no transcript entry left for stage ") + to_string(stage));
  }
  const auto& entry = transcript_.entries[next_];
  if (entry.stage != stage) {
    throw TranscriptMismatch("entry " + std::to_string(next_) + " is for stage " +
                             to_string(entry.stage) + ", got " + to_string(stage));
  }
  for (const auto& fragment : entry.must_contain) {
    if (prompt.find(fragment) == std::string_view::npos) {
      throw TranscriptMismatch("entry " + std::to_string(next_) + ": prompt lacks \"" + fragment + "\"");
    }
  }
  ++next_;
  return entry.response;
}

std::size_t ScriptedModel::consumed() const {
  std::lock_guard lock(mutex_);
  return next_;
}

std::size_t ScriptedModel::remaining() const {
  std::lock_guard lock(mutex_);
  return transcript_.entries.size() - next_;
}

// -- chat completion ----------------------------------------------------------

ProviderConfig load_provider_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read provider config " + path.string());
  ProviderConfig cfg;
  try {
    const Json j = Json::parse(in);
    cfg.endpoint = j.at("endpoint").get<std::string>();
    cfg.model = j.at("model").get<std::string>();
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.max_attempts = j.value("max_attempts", cfg.max_attempts);
    cfg.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", cfg.initial_backoff.count()));
    cfg.request_timeout = std::chrono::milliseconds(j.value("request_timeout_ms", cfg.request_timeout.count()));
    cfg.system_prompt = j.value("system_prompt", cfg.system_prompt);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed provider config: ") + e.what());
  }
  return cfg;
}

ChatCompletionModel::ChatCompletionModel(ProviderConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("provider endpoint needs a scheme");
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  origin_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
  if (config_.max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
}

std::string ChatCompletionModel::complete(Stage, std::string_view prompt) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  httplib::Headers headers;
  if (key != nullptr && *key != '\0') headers.emplace("Authorization", std::string("Bearer ") + key);

  const Json body{
      {"model", config_.model},
      {"temperature", config_.temperature},
      {"messages",
       Json::array({Json{{"role", "system"}, {"content", config_.system_prompt}},
                    Json{{"role", "user"}, {"content", std::string(prompt)}}})},
  };
  const std::string payload = body.dump();

  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
    client.set_read_timeout(secs.count(), 0);
    client.set_connection_timeout(10, 0);
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProviderError("provider returned HTTP " + std::to_string(res->status));
    }
    try {
      const Json doc = Json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw ProviderError(std::string("unexpected provider response: ") + e.what());
    }
  }
  throw ProviderError("provider failed after " + std::to_string(config_.max_attempts) +
                      " attempts: " + last_error);
}

// -- gateway ------------------------------------------------------------------

LlmSession::LlmSession(LlmGateway& gateway, std::string task_id, std::shared_ptr<ModelBackend> backend)
    : gateway_(&gateway), task_id_(std::move(task_id)), backend_(std::move(backend)) {}

std::string LlmSession::complete(Stage stage, std::string_view prompt) {
  if (prompt.empty()) throw ValidationError("prompt must not be empty");
  gateway_->record_call(task_id_);
  std::string response = backend_->complete(stage, prompt);
  calls_.push_back({stage, std::string(prompt), response});
  return response;
}

LlmSession LlmGateway::open(const std::string& task_id, std::shared_ptr<ModelBackend> backend) {
  if (!backend) throw ValidationError("session needs a model backend");
  register_task(task_id);
  return LlmSession(*this, task_id, std::move(backend));
}

void LlmGateway::register_task(const std::string& task_id) {
  std::lock_guard lock(mutex_);
  counts_.try_emplace(task_id, 0);
}

std::size_t LlmGateway::call_count(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  auto it = counts_.find(task_id);
  if (it == counts_.end()) throw UnknownTask("task '" + task_id + "' was never registered");
  return it->second;
}

std::map<std::string, std::size_t> LlmGateway::counts() const {
  std::lock_guard lock(mutex_);
  return counts_;
}

void LlmGateway::record_call(const std::string& task_id) {
  std::lock_guard lock(mutex_);
  ++counts_[task_id];
}

}  // namespace codetool
