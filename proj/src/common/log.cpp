#include "popcal/common/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace popcal::log {

namespace {
std::atomic<Level> g_level{Level::Warn};
std::mutex g_mutex;
} // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void info(std::string_view msg)
{
    if (g_level < Level::Info) {
        return;
    }
    std::lock_guard lock(g_mutex);
    std::cout << msg << '\n' << std::flush;
}

void warn(std::string_view msg)
{
    if (g_level < Level::Warn) {
        return;
    }
    std::lock_guard lock(g_mutex);
    std::cerr << "warning: " << msg << '\n';
}

} // namespace popcal::log
