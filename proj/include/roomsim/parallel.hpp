#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>

namespace roomsim {

// Worker count used by the data-parallel loops. Changing it only affects
// speed: every caller reduces in a fixed order.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [0, n). If any call throws, the exception of the
// lowest failing index is rethrown after the loop.
template <class Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
  std::exception_ptr error;
  std::int64_t error_index = std::numeric_limits<std::int64_t>::max();
  std::mutex lock;
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> guard(lock);
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace roomsim
