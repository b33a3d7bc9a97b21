#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sclab {

inline constexpr const char* kVersion = "0.1.0";

/// Tolerances used across the library. Row sums and one-sided inequalities
/// are held to 1e-12; chained identities to 1e-10.
inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kStrictTol = 1e-12;
inline constexpr double kIdentityTol = 1e-10;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};
class NonStochasticRow : public Error {
 public:
  using Error::Error;
};
class NonTerminatingChain : public Error {
 public:
  using Error::Error;
};
class SuccessUnreachable : public Error {
 public:
  SuccessUnreachable(const std::string& msg, std::vector<std::int32_t> states)
      : Error(msg), states_(std::move(states)) {}
  const std::vector<std::int32_t>& states() const { return states_; }

 private:
  std::vector<std::int32_t> states_;
};
class SolverFailure : public Error {
 public:
  using Error::Error;
};
class DivisionByZero : public Error {
 public:
  using Error::Error;
};
class SupportViolation : public Error {
 public:
  using Error::Error;
};
class SupportMismatch : public Error {
 public:
  using Error::Error;
};
class InvalidParameter : public Error {
 public:
  using Error::Error;
};
class EmptyInput : public Error {
 public:
  using Error::Error;
};
class MissingReturn : public Error {
 public:
  using Error::Error;
};
class HorizonGuardTripped : public Error {
 public:
  using Error::Error;
};
class ProxySuccessUnreachable : public Error {
 public:
  using Error::Error;
};
class InvalidGrid : public Error {
 public:
  using Error::Error;
};

/// Raised when two algebraically equal computation routes disagree beyond
/// tolerance. Indicates a solver or construction bug, never user input.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

inline void check_consistent(bool ok, const std::string& what) {
  if (!ok) throw ConsistencyError("internal consistency check failed: " + what);
}

/// Shortest text form that round-trips a double (17 significant digits).
inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// FNV-1a 64-bit digest, used to fingerprint input files in output metadata.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Thread cap for internally parallel operations: SC_LAB_THREADS when set,
/// otherwise the hardware concurrency.
inline unsigned thread_cap() {
  if (const char* env = std::getenv("SC_LAB_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs f(i) for i in [0, n). Results must be written to disjoint slots so
/// the outcome is independent of scheduling. The first exception thrown by
/// any worker is rethrown on the calling thread.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  unsigned workers = thread_cap();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  if (workers > n) workers = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sclab
