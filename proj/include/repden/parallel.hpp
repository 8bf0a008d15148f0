#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace repden {

//! Runs fn(i) for i in [0, n) on the OpenMP pool. Exceptions are captured per
//! index and the one with the lowest index is rethrown after the loop, so the
//! reported failure does not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, F&& fn)
{
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace repden
