#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <span>
#include <tuple>
#include <vector>

#include "shorttime/errors.hpp"

namespace shorttime {

using cplx = std::complex<double>;

// Allocator returning SIMD-aligned storage so every buffer can be fed to a
// cached plan through the new-array execute interface.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr && n != 0) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

using CVec = std::vector<cplx, FftwAllocator<cplx>>;

namespace detail {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW planning is not thread safe; execution of an existing plan on fresh
// arrays is. Plans are created once per (dim, n, sign) under a lock.
inline fftw_plan cached_plan(int dim, std::size_t n, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<int, std::size_t, int>, PlanPtr> plans;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(dim, n, sign);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second.get();
  const std::size_t total = dim == 1 ? n : n * n;
  CVec scratch(total);
  auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan p = dim == 1 ? fftw_plan_dft_1d(static_cast<int>(n), data, data, sign, FFTW_ESTIMATE)
                         : fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), data, data,
                                            sign, FFTW_ESTIMATE);
  if (p == nullptr) throw Error("FFTW failed to create a plan");
  plans.emplace(key, PlanPtr(p));
  return p;
}

}  // namespace detail

// In-place unnormalized transforms on an n (1-D) or n x n (2-D) array.
// backward: u_j = sum_k c_k e^{+2 pi i jk/n}; forward uses the opposite sign.
inline void fft_backward(CVec& data, int dim, std::size_t n) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(detail::cached_plan(dim, n, FFTW_BACKWARD), p, p);
}

inline void fft_forward(CVec& data, int dim, std::size_t n) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(detail::cached_plan(dim, n, FFTW_FORWARD), p, p);
}

// Smallest n >= lower of the form 2^a 3^b 5^c; FFTW is fast on these.
[[nodiscard]] inline std::size_t next_fast_size(std::size_t lower) {
  std::size_t n = lower < 1 ? 1 : lower;
  for (;; ++n) {
    std::size_t m = n;
    for (std::size_t f : {2u, 3u, 5u}) {
      while (m % f == 0) m /= f;
    }
    if (m == 1) return n;
  }
}

}  // namespace shorttime
