#include "parallel.hpp"

namespace advsal {

namespace {
std::atomic<std::size_t> g_threads{0};
}

void set_thread_count(std::size_t n) noexcept { g_threads = n; }

std::size_t thread_count() noexcept {
  const std::size_t n = g_threads.load();
  if (n != 0) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace advsal
