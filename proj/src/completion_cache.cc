#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>

#include "claimnorm/hashing.h"
#include "claimnorm/llm.h"
#include "claimnorm/log.h"

namespace claimnorm::llm {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw std::runtime_error("cannot open cache " + path.string() + ": " + std::strerror(errno));
  const ssize_t written = ::write(fd, line.data(), line.size());
  const int saved = errno;
  ::close(fd);
  if (written != static_cast<ssize_t>(line.size())) {
    throw std::runtime_error("short write to cache " + path.string() + ": " + std::strerror(saved));
  }
}

}  // namespace

std::string cache_key(const std::string& prompt, const GenerationConfig& config) {
  nlohmann::json canonical;
  canonical["prompt"] = prompt;
  canonical["model_id"] = config.model_id;
  canonical["max_tokens"] = config.max_tokens;
  canonical["temperature"] = config.temperature;
  canonical["seed"] = config.seed ? nlohmann::json(*config.seed) : nlohmann::json(nullptr);
  return sha256_hex(canonical.dump());
}

CompletionCache::CompletionCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read cache " + path_.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j["key"].is_string() ||
        !j.contains("completion_text") || !j["completion_text"].is_string()) {
      ++corrupt_lines_;
      log().warn("cache {}: skipping corrupt line {}", path_.string(), line_no);
      continue;
    }
    entries_[j["key"].get<std::string>()] = j["completion_text"].get<std::string>();
  }
}

std::optional<std::string> CompletionCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CompletionCache::put(const std::string& key, const std::string& prompt_sha, const std::string& text,
                          const GenerationConfig& config) {
  std::lock_guard lock(mutex_);
  if (!path_.empty()) {
    nlohmann::ordered_json j;
    j["key"] = key;
    j["prompt_sha"] = prompt_sha;
    j["completion_text"] = text;
    j["config"] = config.to_json();
    j["timestamp"] = utc_timestamp();
    append_line(path_, j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
  }
  entries_[key] = text;
}

std::size_t CompletionCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::pair<std::string, bool> CompletionCache::get_or_compute(const std::string& key, const std::string& prompt_sha,
                                                             const GenerationConfig& config,
                                                             const std::function<std::string()>& compute) {
  {
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return !in_flight_.contains(key); });
    if (const auto it = entries_.find(key); it != entries_.end()) return {it->second, true};
    in_flight_.insert(key);
  }
  std::string text;
  try {
    text = compute();
    put(key, prompt_sha, text, config);
  } catch (...) {
    {
      std::lock_guard lock(mutex_);
      in_flight_.erase(key);
    }
    done_.notify_all();
    throw;
  }
  {
    std::lock_guard lock(mutex_);
    in_flight_.erase(key);
  }
  done_.notify_all();
  return {text, false};
}

}  // namespace claimnorm::llm
