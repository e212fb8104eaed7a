#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace fedsac {

// Execution policy for the data-parallel loops (clients within a round,
// per-row QP solves, pairwise matrix builds). Every loop body writes a
// disjoint output slot, so Serial and Parallel are bit-identical; the
// serial path is kept as the reference the tests compare against.
enum class Exec { Serial, Parallel };

// Exceptions cannot cross an OpenMP region, so they are captured per
// index and the lowest-index one is rethrown (scheduling-independent).
template <typename F>
void parallel_for(Exec exec, std::size_t n, F&& body) {
  if (exec == Exec::Parallel) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
  }
}

}  // namespace fedsac
