#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace qsbd::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

struct Sink {
  Level threshold = Level::kInfo;
  std::function<void(Level, const std::string&)> write;
};

inline Sink& sink() {
  static Sink s{Level::kInfo, [](Level level, const std::string& msg) {
                  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
                  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << msg << '\n';
                }};
  return s;
}

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

inline void emit(Level level, const std::string& msg) {
  std::lock_guard lock(sink_mutex());
  Sink& s = sink();
  if (level >= s.threshold && s.write) s.write(level, msg);
}

inline void debug(const std::string& msg) { emit(Level::kDebug, msg); }
inline void info(const std::string& msg) { emit(Level::kInfo, msg); }
inline void warn(const std::string& msg) { emit(Level::kWarn, msg); }
inline void error(const std::string& msg) { emit(Level::kError, msg); }

// Swaps the sink for the lifetime of the guard (tests capture warnings this way).
class ScopedSink {
 public:
  explicit ScopedSink(Sink replacement) {
    std::lock_guard lock(sink_mutex());
    saved_ = std::exchange(sink(), std::move(replacement));
  }
  ~ScopedSink() {
    std::lock_guard lock(sink_mutex());
    sink() = std::move(saved_);
  }
  ScopedSink(const ScopedSink&) = delete;
  ScopedSink& operator=(const ScopedSink&) = delete;

 private:
  Sink saved_;
};

}  // namespace qsbd::log
