#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "slantkit/harvest.hpp"
#include "slantkit/text_io.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("slantkit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    slantkit::write_file(path_ / name, content);
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// Fast retries, silent log and a frozen clock.
inline slantkit::EngineOptions quiet_engine() {
  slantkit::EngineOptions o;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.max_backoff = std::chrono::milliseconds(4);
  o.log = [](std::string_view) {};
  o.clock = [] { return std::chrono::system_clock::time_point{}; };
  return o;
}

inline slantkit::Endpoint endpoint(const std::string& name) {
  slantkit::Endpoint e;
  e.name = name;
  e.url = "http://127.0.0.1:1";
  e.model = name;
  return e;
}

inline std::filesystem::path data_dir() { return SLANTKIT_DATA_DIR; }
inline std::filesystem::path golden_dir() { return SLANTKIT_GOLDEN_DIR; }

}  // namespace testutil
