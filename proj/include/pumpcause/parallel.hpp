#ifndef PUMPCAUSE_PARALLEL_HPP
#define PUMPCAUSE_PARALLEL_HPP

#include <cstddef>
#include <exception>

#include <omp.h>

namespace pumpcause {

// Every data-parallel kernel (chains, bootstrap resamples, per-pump
// features) has a plain serial loop kept as the reference path. Both paths
// write results by index, so their outputs are bit-identical.
enum class Execution { serial, parallel };

struct Parallelism {
  Execution mode = Execution::parallel;
  int threads = 0;  // 0 = omp default (hardware concurrency)

  static Parallelism serial() { return {Execution::serial, 1}; }
  static Parallelism with_threads(int n) {
    return n == 1 ? serial() : Parallelism{Execution::parallel, n};
  }

  int resolved_threads() const {
    if (mode == Execution::serial) return 1;
    return threads > 0 ? threads : omp_get_max_threads();
  }
};

/// Runs body(i) for i in [0, n) using the requested execution path.
template <typename Body>
void for_each_index(std::size_t n, const Parallelism& par, Body&& body) {
  if (par.mode == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const long count = static_cast<long>(n);
  std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(par.resolved_threads())
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(pumpcause_for_each_error)
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pumpcause

#endif  // PUMPCAUSE_PARALLEL_HPP
