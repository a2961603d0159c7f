#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "codetool/model.hpp"

namespace codetool {

/// Last-write projection of the repository history, keyed by api_path.
using RepoSnapshot = std::map<std::string, RepoEntry>;

/// Diagnostic for a store line that failed to parse. Loading stops there;
/// entries from earlier lines are kept.
struct CorruptStore {
  std::size_t line_number = 0;  // 1-based
  std::string message;
};

/// Reusable function repository backed by an append-only JSONL file.
///
/// One writer at a time (appends are serialized by an internal mutex);
/// readers take a snapshot and never observe a half-applied harvest.
class FunctionRepository {
 public:
  using Clock = std::function<TimestampMs()>;

  /// In-memory repository (nothing persisted).
  FunctionRepository();

  /// Replays `storage_path` if it exists; a missing file is an empty
  /// repository. A malformed line stops the replay and is reported through
  /// corruption(). The first subsequent append truncates the file back to
  /// the last good line.
  static FunctionRepository load(const std::filesystem::path& storage_path);

  FunctionRepository(FunctionRepository&& other) noexcept;
  FunctionRepository& operator=(FunctionRepository&& other) noexcept;
  FunctionRepository(const FunctionRepository&) = delete;
  FunctionRepository& operator=(const FunctionRepository&) = delete;

  /// Stores every bound sub-function of a successfully executed program.
  /// Throws PreconditionError unless report.status is ok, StorageError when
  /// the append cannot be persisted (in-memory state is left untouched).
  std::vector<RepoEntry> harvest(const GeneratedProgram& program, const ExecutionReport& report,
                                 const std::string& task_id);

  /// Appends one entry (persisted first, then applied).
  void append(const RepoEntry& entry);

  std::optional<RepoEntry> get(const std::string& api_path) const;
  RepoSnapshot snapshot() const;
  std::vector<RepoEntry> history() const;
  std::size_t size() const;

  /// Drops all entries and truncates the store.
  void clear();

  const std::optional<CorruptStore>& corruption() const noexcept { return corruption_; }
  const std::filesystem::path& storage_path() const noexcept { return storage_path_; }

  void set_clock(Clock clock);

 private:
  void persist_locked(const std::vector<RepoEntry>& entries);

  mutable std::mutex mutex_;
  std::filesystem::path storage_path_;
  RepoSnapshot entries_;
  std::vector<RepoEntry> history_;
  std::optional<CorruptStore> corruption_;
  std::uintmax_t good_bytes_ = 0;  // length of the valid prefix of the store
  bool needs_repair_ = false;
  Clock clock_;
};

/// Wall clock in milliseconds since the epoch.
TimestampMs now_ms();

}  // namespace codetool
