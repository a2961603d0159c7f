#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "codetool/model.hpp"

namespace codetool {

/// Anything that turns a prompt into text.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string complete(Stage stage, std::string_view prompt) = 0;
};

struct TranscriptEntry {
  Stage stage = Stage::t2c;
  std::vector<std::string> must_contain;
  std::string response;

  bool operator==(const TranscriptEntry&) const = default;
};

struct Transcript {
  std::vector<TranscriptEntry> entries;

  bool operator==(const Transcript&) const = default;
};

void to_json(Json& j, const TranscriptEntry& v);
void from_json(const Json& j, TranscriptEntry& v);
void to_json(Json& j, const Transcript& v);
void from_json(const Json& j, Transcript& v);

/// Throws ParseError.
Transcript parse_transcript(std::string_view text);
Transcript load_transcript(const std::filesystem::path& path);

/// Deterministic test double: replays a transcript strictly in order.
class ScriptedModel : public ModelBackend {
 public:
  explicit ScriptedModel(Transcript transcript);

  /// Throws TranscriptExhausted when no entry is left and TranscriptMismatch
  /// on a stage mismatch or a missing must_contain fragment.
  std::string complete(Stage stage, std::string_view prompt) override;

  std::size_t consumed() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  Transcript transcript_;
  std::size_t next_ = 0;
};

struct ProviderConfig {
  std::string endpoint;  // e.g. https://api.openai.com/v1/chat/completions
  std::string model;
  std::string api_key_env = "LLM_API_KEY";
  double temperature = 0.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds request_timeout{120000};
  std::string system_prompt = "You are a helpful assistant.";
};

/// Reads `{"endpoint":..,"model":..,"api_key_env":..,"temperature":..}`; max_attempts,
/// initial_backoff_ms, request_timeout_ms and system_prompt are optional.
ProviderConfig load_provider_config(const std::filesystem::path& path);

/// Chat-completion HTTP adapter (system + user message, first choice's
/// message content). The key is read from the environment at call time.
class ChatCompletionModel : public ModelBackend {
 public:
  explicit ChatCompletionModel(ProviderConfig config);

  /// Retries transport errors, 429 and 5xx with exponential backoff.
  /// Throws ProviderError once attempts are exhausted or on other statuses.
  std::string complete(Stage stage, std::string_view prompt) override;

  const ProviderConfig& config() const noexcept { return config_; }

 private:
  ProviderConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

class LlmGateway;

/// One task's view of the gateway: forwards to its backend, counts the call
/// against the task, and keeps the exchanged text.
class LlmSession {
 public:
  /// Throws ValidationError on an empty prompt; backend errors propagate
  /// after the call has been counted.
  std::string complete(Stage stage, std::string_view prompt);

  const std::string& task_id() const noexcept { return task_id_; }
  const std::vector<LlmCall>& calls() const noexcept { return calls_; }

 private:
  friend class LlmGateway;
  LlmSession(LlmGateway& gateway, std::string task_id, std::shared_ptr<ModelBackend> backend);

  LlmGateway* gateway_;
  std::string task_id_;
  std::shared_ptr<ModelBackend> backend_;
  std::vector<LlmCall> calls_;
};

/// Shared across worker threads; per-task counters are exact under
/// concurrency.
class LlmGateway {
 public:
  /// Registers the task (counter starts at 0 if new) and binds a backend.
  LlmSession open(const std::string& task_id, std::shared_ptr<ModelBackend> backend);

  void register_task(const std::string& task_id);

  /// Throws UnknownTask for a task that was never registered.
  std::size_t call_count(const std::string& task_id) const;

  std::map<std::string, std::size_t> counts() const;

 private:
  friend class LlmSession;
  void record_call(const std::string& task_id);

  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> counts_;
};

}  // namespace codetool
