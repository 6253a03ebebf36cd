#include "rvlab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace rvlab {

namespace {

std::atomic<unsigned> configured{0};

unsigned default_threads() {
  if (const char* env = std::getenv("RVLAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

void set_thread_count(unsigned n) { configured = n; }

unsigned thread_count() {
  const unsigned n = configured.load();
  return n > 0 ? n : default_threads();
}

}  // namespace rvlab
