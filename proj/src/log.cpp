#include "uacep/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

#include "uacep/error.hpp"

namespace uacep::log {

namespace {

std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

void default_sink(Level lvl, std::string_view message) {
  static constexpr const char* kTags[] = {"debug", "info", "warn", "error"};
  std::cerr << '[' << kTags[static_cast<int>(lvl)] << "] " << message << '\n';
}

Sink& sink_ref() {
  static Sink sink = default_sink;
  return sink;
}

}  // namespace

void set_level(Level lvl) { g_level = lvl; }
Level level() { return g_level; }

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  Sink previous = std::move(sink_ref());
  sink_ref() = sink ? std::move(sink) : Sink(default_sink);
  return previous;
}

void write(Level lvl, std::string_view message) {
  if (lvl < g_level.load() || lvl == Level::off) return;
  std::lock_guard lock(g_mutex);
  sink_ref()(lvl, message);
}

Level parse_level(std::string_view name) {
  if (name == "debug") return Level::debug;
  if (name == "info") return Level::info;
  if (name == "warn") return Level::warn;
  if (name == "error") return Level::error;
  if (name == "off") return Level::off;
  throw ValidationError("unknown log level '" + std::string(name) + "'");
}

}  // namespace uacep::log
