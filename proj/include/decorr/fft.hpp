#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>

#include "error.hpp"

namespace decorr {

namespace detail {
// The FFTW planner is not re-entrant; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;
}  // namespace detail

/// Real-input FFT of fixed size backed by FFTW (estimate-mode plans, so the
/// result is reproducible run to run). forward() yields n/2+1 bins;
/// inverse() is normalized so inverse(forward(x)) == x.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    require(n >= 2, "FFT size must be >= 2");
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    spec_.reset(static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int ni = static_cast<int>(n);
    fwd_.reset(fftw_plan_dft_r2c_1d(ni, real_.get(), spec_.get(), FFTW_ESTIMATE));
    inv_.reset(fftw_plan_dft_c2r_1d(ni, spec_.get(), real_.get(), FFTW_ESTIMATE));
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) {
    require(in.size() == n_ && out.size() == bins(), "FFT size mismatch");
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(fwd_.get());
    for (std::size_t k = 0; k < bins(); ++k)
      out[k] = {spec_.get()[k][0], spec_.get()[k][1]};
  }

  void inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    require(in.size() == bins() && out.size() == n_, "FFT size mismatch");
    for (std::size_t k = 0; k < bins(); ++k) {
      spec_.get()[k][0] = in[k].real();
      spec_.get()[k][1] = in[k].imag();
    }
    fftw_execute(inv_.get());
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = real_.get()[i] * scale;
  }

 private:
  std::size_t n_;
  std::unique_ptr<double, detail::FftwFree> real_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spec_;
  detail::PlanPtr fwd_;
  detail::PlanPtr inv_;
};

}  // namespace decorr
