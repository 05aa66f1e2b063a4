#include "dexp/parallel.hpp"

#include <cstdlib>
#include <string>

namespace dexp {

std::size_t worker_count() {
  static const std::size_t cached = [] {
    const char* env = std::getenv("DEXP_THREADS");
    if (env == nullptr) return std::size_t{1};
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) return std::size_t{1};
    return static_cast<std::size_t>(v);
  }();
  return cached;
}

}  // namespace dexp
