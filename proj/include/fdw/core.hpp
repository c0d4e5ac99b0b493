#ifndef FDW_CORE_HPP
#define FDW_CORE_HPP

/// \file core.hpp
/// \brief Shared error types and a minimal parallel-for used across the library.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fdw {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or inconsistent problem data (grids, coefficients, probes).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not reach its accuracy contract.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Grids of two objects that must live on the same discretization differ.
class GridMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
  static std::atomic<unsigned> cap{0};
  return cap;
}
}  // namespace detail

/// Caps the number of worker threads used by parallel loops (0 = hardware).
inline void set_max_threads(unsigned n) { detail::thread_cap().store(n); }

inline unsigned max_threads() {
  unsigned cap = detail::thread_cap().load();
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cap == 0 ? hw : std::min(cap, hw);
}

/// Runs body(i) for i in [0, n). Iterations must be independent; results are
/// identical for any thread count because each index is processed exactly once
/// and writes only its own output slot.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(max_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < n; i = next++) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = n;
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fdw

#endif  // FDW_CORE_HPP
