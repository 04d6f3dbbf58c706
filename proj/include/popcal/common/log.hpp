#pragma once

#include <string_view>

namespace popcal::log {

enum class Level { Quiet, Warn, Info };

void set_level(Level level);
Level level();

/// Progress line on stdout.
void info(std::string_view msg);
/// Warning on stderr.
void warn(std::string_view msg);

} // namespace popcal::log
