#include "npspec/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "npspec/errors.hpp"

namespace npspec {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonResolved: return "NonResolved";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::DegenerateState: return "DegenerateState";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::ZeroProbabilityHistory: return "ZeroProbabilityHistory";
    case ErrorKind::ConstructionFailed: return "ConstructionFailed";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

std::size_t thread_count() {
  if (const char* env = std::getenv("NPSPEC_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace npspec
