#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "acgen/providers/mock.hpp"
#include "acgen/providers/provider.hpp"
#include "acgen/providers/transport.hpp"

namespace acgen::support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return ACGEN_SOURCE_DIR; }
inline fs::path toy_dataset() { return source_dir() / "data" / "toy" / "dataset.json"; }

/// Mock backend behind a call log, wrapped in a Provider.
struct MockStack {
  std::shared_ptr<providers::MockBackend> mock;
  std::shared_ptr<providers::LoggingTransport> log;
  std::shared_ptr<providers::Provider> provider;

  providers::Provider& operator*() const { return *provider; }
  providers::Provider* get() const { return provider.get(); }
};

inline MockStack mock_stack(const std::string& name, std::size_t dim = 64, int max_parallel = 1) {
  MockStack s;
  s.mock = std::make_shared<providers::MockBackend>(dim);
  s.log = std::make_shared<providers::LoggingTransport>(s.mock);
  providers::ProviderConfig cfg;
  cfg.name = name;
  cfg.model_name = "mock-" + name;
  cfg.dim = dim;
  cfg.max_parallel = max_parallel;
  s.provider = std::make_shared<providers::Provider>(cfg, s.log);
  return s;
}

/// Removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "acgen") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& p) const { return path_ / p; }

 private:
  fs::path path_;
};

/// Smallest structurally valid PNG; `salt` lands in a tEXt chunk so the bytes differ.
inline std::vector<std::uint8_t> tiny_png(const std::string& salt) {
  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  auto chunk = [&](const char* type, const std::vector<std::uint8_t>& data) {
    std::uint32_t n = static_cast<std::uint32_t>(data.size());
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(n >> s));
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    for (int i = 0; i < 4; ++i) out.push_back(0);  // crc, not checked
  };
  chunk("IHDR", {0, 0, 0, 1, 0, 0, 0, 1, 8, 2, 0, 0, 0});
  std::vector<std::uint8_t> text{'S', 'a', 'l', 't', 0};
  text.insert(text.end(), salt.begin(), salt.end());
  chunk("tEXt", text);
  chunk("IDAT", {0x78, 0x9c, 0x63, 0x60, 0x00, 0x00, 0x00, 0x02, 0x00, 0x01});
  chunk("IEND", {});
  return out;
}

inline std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  double n = 0;
  for (auto& x : v) {
    x = g(rng);
    n += x * x;
  }
  for (auto& x : v) x /= std::sqrt(n);
  return v;
}

}  // namespace acgen::support
