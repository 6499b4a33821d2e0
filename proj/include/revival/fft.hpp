#pragma once

// Thin RAII layer over FFTW3 (complex-to-complex, double precision).
// Plans are created under a global lock because the FFTW planner is not
// thread-safe; executing a plan on fresh buffers is.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>

namespace revival::fft {

using Complex = std::complex<double>;

namespace detail {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(Complex* p) const { fftw_free(p); }
};

}  // namespace detail

/// SIMD-aligned complex buffer. All buffers share FFTW's alignment, so a
/// plan made on one is valid for any other of the same length.
class Buffer {
 public:
  explicit Buffer(std::size_t n)
      : n_(n), data_(reinterpret_cast<Complex*>(fftw_alloc_complex(n))) {
    std::fill(data_.get(), data_.get() + n_, Complex{});
  }
  std::size_t size() const { return n_; }
  Complex* data() { return data_.get(); }
  const Complex* data() const { return data_.get(); }
  Complex& operator[](std::size_t i) { return data_.get()[i]; }
  const Complex& operator[](std::size_t i) const { return data_.get()[i]; }
  std::span<Complex> span() { return {data_.get(), n_}; }
  std::span<const Complex> span() const { return {data_.get(), n_}; }

 private:
  std::size_t n_;
  std::unique_ptr<Complex, detail::FftwFree> data_;
};

enum class Direction { Forward = FFTW_FORWARD, Backward = FFTW_BACKWARD };

/// Out-of-place complex DFT of fixed length. Unnormalized in both directions.
class Plan {
 public:
  Plan(std::size_t n, Direction dir) : n_(n) {
    Buffer in(n), out(n);
    std::lock_guard lock(detail::planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()), static_cast<int>(dir),
                             FFTW_ESTIMATE);
  }
  ~Plan() {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  std::size_t size() const { return n_; }

  void execute(const Buffer& in, Buffer& out) const {
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

 private:
  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace revival::fft
