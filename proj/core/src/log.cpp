// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "mle_uvad/log.hpp"

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace mle_uvad::log {
namespace {

spdlog::level::level_enum to_spdlog(Level level) {
  switch (level) {
    case Level::quiet:
      return spdlog::level::err;
    case Level::debug:
      return spdlog::level::debug;
    case Level::info:
      break;
  }
  return spdlog::level::info;
}

struct State {
  std::shared_ptr<spdlog::logger> logger;
  Level level;
  State() : logger(spdlog::stderr_color_mt("mle_uvad")), level(level_from_env()) {
    logger->set_pattern("[%l] %v");
    logger->set_level(to_spdlog(level));
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

Level level_from_env() {
  const char* raw = std::getenv("MLE_UVAD_LOG");
  if (raw == nullptr) return Level::info;
  const std::string value(raw);
  if (value == "quiet") return Level::quiet;
  if (value == "debug") return Level::debug;
  return Level::info;
}

void set_level(Level level) {
  state().level = level;
  state().logger->set_level(to_spdlog(level));
}

Level level() { return state().level; }

void info(std::string_view message) { state().logger->info("{}", message); }
void debug(std::string_view message) { state().logger->debug("{}", message); }
void warn(std::string_view message) { state().logger->warn("{}", message); }

}  // namespace mle_uvad::log
