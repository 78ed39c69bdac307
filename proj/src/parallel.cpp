#include "treerange/parallel.hpp"

#include <cstdlib>
#include <string>

namespace treerange {

unsigned default_workers() {
  if (const char* env = std::getenv("TREERANGE_WORKERS"); env != nullptr && *env != '\0') {
    try {
      const unsigned long v = std::stoul(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

}  // namespace treerange
