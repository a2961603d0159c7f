#include "codetool/function_repo.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace codetool {

TimestampMs now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

FunctionRepository::FunctionRepository() : clock_(now_ms) {}

FunctionRepository::FunctionRepository(FunctionRepository&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  storage_path_ = std::move(other.storage_path_);
  entries_ = std::move(other.entries_);
  history_ = std::move(other.history_);
  corruption_ = std::move(other.corruption_);
  good_bytes_ = other.good_bytes_;
  needs_repair_ = other.needs_repair_;
  clock_ = std::move(other.clock_);
}

FunctionRepository& FunctionRepository::operator=(FunctionRepository&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    storage_path_ = std::move(other.storage_path_);
    entries_ = std::move(other.entries_);
    history_ = std::move(other.history_);
    corruption_ = std::move(other.corruption_);
    good_bytes_ = other.good_bytes_;
    needs_repair_ = other.needs_repair_;
    clock_ = std::move(other.clock_);
  }
  return *this;
}

FunctionRepository FunctionRepository::load(const std::filesystem::path& storage_path) {
  FunctionRepository repo;
  repo.storage_path_ = storage_path;
  std::ifstream in(storage_path, std::ios::binary);
  if (!in) return repo;  // absent store: empty repository

  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  std::size_t line_number = 0;
  while (pos < content.size()) {
    ++line_number;
    auto nl = content.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const auto line = content.substr(pos, terminated ? nl - pos : std::string::npos);
    const std::size_t next = terminated ? nl + 1 : content.size();
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      pos = next;
      repo.good_bytes_ = pos;
      continue;
    }
    try {
      auto entry = Json::parse(line).get<RepoEntry>();
      validate(entry);
      repo.history_.push_back(entry);
      repo.entries_[entry.api_path] = std::move(entry);
    } catch (const std::exception& e) {
      repo.corruption_ = CorruptStore{line_number, e.what()};
      repo.needs_repair_ = true;
      break;
    }
    pos = next;
    repo.good_bytes_ = pos;
    if (!terminated) {
      // complete record without its newline: restore it before appending
      repo.needs_repair_ = true;
    }
  }
  return repo;
}

void FunctionRepository::set_clock(Clock clock) {
  std::lock_guard lock(mutex_);
  clock_ = std::move(clock);
}

void FunctionRepository::persist_locked(const std::vector<RepoEntry>& entries) {
  if (storage_path_.empty() || entries.empty()) return;
  std::error_code ec;
  if (needs_repair_ && std::filesystem::exists(storage_path_, ec)) {
    std::filesystem::resize_file(storage_path_, good_bytes_, ec);
    if (ec) throw StorageError("cannot repair store " + storage_path_.string() + ": " + ec.message());
    // the last good record may lack its newline
    if (good_bytes_ > 0) {
      std::ifstream probe(storage_path_, std::ios::binary);
      probe.seekg(static_cast<std::streamoff>(good_bytes_) - 1);
      if (probe.get() != '\n') {
        std::ofstream fix(storage_path_, std::ios::binary | std::ios::app);
        fix << '\n';
        if (!fix) throw StorageError("cannot repair store " + storage_path_.string());
        ++good_bytes_;
      }
    }
  }

  std::string payload;
  for (const auto& e : entries) payload += Json(e).dump() + "\n";

  std::ofstream out(storage_path_, std::ios::binary | std::ios::app);
  if (!out) throw StorageError("cannot open store " + storage_path_.string());
  needs_repair_ = true;
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.flush();
  if (!out) throw StorageError("write to store failed: " + storage_path_.string());
  needs_repair_ = false;
  good_bytes_ += payload.size();
}

void FunctionRepository::append(const RepoEntry& entry) {
  validate(entry);
  std::lock_guard lock(mutex_);
  persist_locked({entry});
  history_.push_back(entry);
  entries_[entry.api_path] = entry;
}

std::vector<RepoEntry> FunctionRepository::harvest(const GeneratedProgram& program,
                                                   const ExecutionReport& report,
                                                   const std::string& task_id) {
  if (report.status != ExecutionStatus::ok) {
    throw PreconditionError("harvest requires a successful execution report");
  }
  std::lock_guard lock(mutex_);
  const TimestampMs stamp = clock_();
  std::vector<RepoEntry> fresh;
  for (const auto& fn : program.sub_functions) {
    if (!fn.api_path) continue;
    std::string body = program.source.substr(fn.span.start, fn.span.size());
    if (body.empty() || body.back() != '\n') body += '\n';
    RepoEntry entry{*fn.api_path, fn.name, "# api_path: " + *fn.api_path + "\n" + body, task_id,
                    stamp};
    validate(entry);
    fresh.push_back(std::move(entry));
  }
  persist_locked(fresh);  // throws before any in-memory change
  for (const auto& e : fresh) {
    history_.push_back(e);
    entries_[e.api_path] = e;
  }
  return fresh;
}

std::optional<RepoEntry> FunctionRepository::get(const std::string& api_path) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(api_path);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

RepoSnapshot FunctionRepository::snapshot() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::vector<RepoEntry> FunctionRepository::history() const {
  std::lock_guard lock(mutex_);
  return history_;
}

std::size_t FunctionRepository::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void FunctionRepository::clear() {
  std::lock_guard lock(mutex_);
  if (!storage_path_.empty()) {
    std::ofstream out(storage_path_, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot truncate store " + storage_path_.string());
  }
  entries_.clear();
  history_.clear();
  corruption_.reset();
  good_bytes_ = 0;
  needs_repair_ = false;
}

}  // namespace codetool
