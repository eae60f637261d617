#include "cdp/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace cdp {

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) { g_max_threads.store(n); }

unsigned max_threads() {
  const unsigned n = g_max_threads.load();
  if (n != 0) return n;
  // hardware_concurrency() reads sysfs on every call; query it once.
  static const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return hw;
}

}  // namespace cdp
