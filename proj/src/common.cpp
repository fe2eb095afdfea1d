#include "roomsim/error.hpp"
#include "roomsim/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace roomsim {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::parse: return "parse_error";
    case ErrorKind::validation: return "validation_error";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::degenerate: return "degenerate_data";
    case ErrorKind::numerical: return "numerical_failure";
    case ErrorKind::incompatible: return "incompatible";
  }
  return "unknown";
}

namespace {
std::atomic<int> g_threads{0};
}

void set_num_threads(int n) { g_threads = std::max(0, n); }

int num_threads() {
  const int n = g_threads.load();
  if (n > 0) return n;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace roomsim
