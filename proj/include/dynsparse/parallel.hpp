#pragma once

#include <cstddef>
#include <exception>

namespace dynsparse {

/// Selects between the OpenMP kernel and the serial reference loop.
/// Both paths draw from per-index random streams, so they produce
/// bit-identical results.
enum class Execution { serial, parallel };

/// Runs body(i) for i in [0, count). In parallel mode the first exception
/// thrown by any iteration is rethrown after the loop completes.
template <class Body>
void for_each_index(Execution exec, std::size_t count, Body&& body) {
  const long n = static_cast<long>(count);
  if (exec == Execution::serial) {
    for (long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    return;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(dynsparse_for_each_index)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace dynsparse
