#include "acgen/providers/transport.hpp"

#include <fstream>
#include <thread>
#include <sstream>

#include "acgen/error.hpp"
#include "acgen/util/encoding.hpp"

namespace acgen::providers {

namespace fs = std::filesystem;
using nlohmann::json;

json LoggingTransport::call(std::string_view op, const json& request) {
  {
    std::lock_guard lock(mu_);
    calls_.push_back({std::string(op), request});
  }
  return inner_->call(op, request);
}

std::vector<LoggingTransport::Call> LoggingTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t LoggingTransport::count() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

std::size_t LoggingTransport::count(std::string_view op) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& c : calls_) n += c.op == op ? 1 : 0;
  return n;
}

void LoggingTransport::clear() {
  std::lock_guard lock(mu_);
  calls_.clear();
}

std::string to_string(CacheMode mode) {
  switch (mode) {
    case CacheMode::Off: return "off";
    case CacheMode::Auto: return "auto";
    case CacheMode::Record: return "record";
    case CacheMode::Replay: return "replay";
  }
  return "off";
}

CacheMode cache_mode_from_string(const std::string& s) {
  if (s == "off") return CacheMode::Off;
  if (s == "auto") return CacheMode::Auto;
  if (s == "record") return CacheMode::Record;
  if (s == "replay") return CacheMode::Replay;
  throw Error(ErrorCode::ConfigError, "unknown cache mode '" + s + "' (off|auto|record|replay)");
}

ReplayTransport::ReplayTransport(std::shared_ptr<Transport> inner, fs::path dir, CacheMode mode)
    : inner_(std::move(inner)), dir_(std::move(dir)), mode_(mode) {
  if (!inner_ && mode_ != CacheMode::Replay) {
    throw Error(ErrorCode::ConfigError, "a backend is required unless the cache is in strict replay mode");
  }
}

std::string ReplayTransport::key_for(std::string_view op, const json& request) {
  return util::canonical_hash({{"op", op}, {"request", request}});
}

fs::path ReplayTransport::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

ReplayTransport::Stats ReplayTransport::stats() const { return {hits_.load(), misses_.load(), writes_.load()}; }

json ReplayTransport::call(std::string_view op, const json& request) {
  if (mode_ == CacheMode::Off) return inner_->call(op, request);
  const std::string key = key_for(op, request);
  const fs::path path = path_for(key);

  if (mode_ != CacheMode::Record) {
    std::shared_lock lock(mu_);
    std::ifstream in(path);
    if (in) {
      json entry;
      try {
        entry = json::parse(in);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Io, "corrupt cache entry " + path.string() + ": " + e.what());
      }
      ++hits_;
      return entry.at("response");
    }
  }
  ++misses_;
  if (mode_ == CacheMode::Replay) {
    throw Error(ErrorCode::CacheMiss, "no recorded response for " + std::string(op) + " request " + key,
                {{"key", key}, {"op", op}});
  }

  json response = inner_->call(op, request);

  std::unique_lock lock(mu_);
  fs::create_directories(path.parent_path());
  std::ostringstream suffix;
  suffix << ".tmp" << std::hash<std::thread::id>{}(std::this_thread::get_id());
  fs::path tmp = path;
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << util::canonical_dump({{"op", op}, {"request", request}, {"response", response}});
    if (!out) throw Error(ErrorCode::Io, "cannot write cache entry " + tmp.string());
  }
  fs::rename(tmp, path);
  ++writes_;
  return response;
}

}  // namespace acgen::providers
