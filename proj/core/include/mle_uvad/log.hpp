// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace mle_uvad::log {

enum class Level { quiet, info, debug };

// Reads MLE_UVAD_LOG (quiet|info|debug). Unknown or unset values mean info.
Level level_from_env();
void set_level(Level level);
Level level();

void info(std::string_view message);
void debug(std::string_view message);
// Warnings are suppressed only at quiet.
void warn(std::string_view message);

}  // namespace mle_uvad::log
