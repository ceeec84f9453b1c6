#include "scimetric/rng.hpp"

#include <atomic>

namespace scimetric {
namespace {
std::atomic<unsigned> g_thread_limit{0};
}

void set_thread_limit(unsigned n) noexcept { g_thread_limit = n; }

unsigned thread_limit() noexcept {
  const unsigned n = g_thread_limit.load();
  if (n != 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace scimetric
