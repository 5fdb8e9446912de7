#include "vcgs/common/log.h"

#include <atomic>

namespace vcgs::log {

namespace {
std::atomic<Level> g_threshold{Level::kInfo};
}

Level threshold() { return g_threshold.load(std::memory_order_relaxed); }
void set_threshold(Level level) { g_threshold.store(level); }

}  // namespace vcgs::log
