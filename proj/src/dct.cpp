#include "dct.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace npspec::detail {
namespace {

struct FftwBuffer {
  double* ptr = nullptr;
  std::size_t size = 0;
  ~FftwBuffer() { fftw_free(ptr); }
  double* get(std::size_t n) {
    if (n > size) {
      fftw_free(ptr);
      ptr = static_cast<double*>(fftw_malloc(sizeof(double) * n));
      size = n;
    }
    return ptr;
  }
};

class PlanCache {
 public:
  fftw_plan get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    // Planning needs scratch arrays with fftw_malloc alignment; execution
    // uses the new-array interface on similarly aligned buffers.
    double* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    double* out = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    fftw_plan plan =
        fftw_plan_r2r_1d(n, in, out, FFTW_REDFT00, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(n, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<int, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void dct1(std::span<double> data) {
  const std::size_t n = data.size();
  if (n < 2) return;
  thread_local FftwBuffer in_buf;
  thread_local FftwBuffer out_buf;
  double* in = in_buf.get(n);
  double* out = out_buf.get(n);
  std::memcpy(in, data.data(), sizeof(double) * n);
  fftw_execute_r2r(plan_cache().get(static_cast<int>(n)), in, out);
  std::memcpy(data.data(), out, sizeof(double) * n);
}

}  // namespace npspec::detail
