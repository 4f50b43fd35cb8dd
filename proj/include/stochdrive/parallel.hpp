#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace stochdrive {

// Selects between the OpenMP kernel and the plain serial loop. The serial
// path is the reference implementation; both must give identical results.
enum class Execution { Serial, Parallel };

// Runs body(i) for i in [0, n). Iterations must be independent and write
// only to their own slot. The first exception (lowest index) is rethrown
// after the loop so both execution modes fail identically.
template <typename Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
  const bool parallel = exec == Execution::Parallel;
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Caps OpenMP worker count; n <= 0 leaves the runtime default.
void set_worker_count(int n);
int worker_count();

}  // namespace stochdrive
