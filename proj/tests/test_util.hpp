#pragma once

#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <vector>

#include <decorr/fft.hpp>

namespace test_util {

inline double mean_square(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0) / static_cast<double>(x.size());
}

inline double db(double power_ratio) { return 10.0 * std::log10(power_ratio); }

inline double correlation(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

inline std::vector<double> difference(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

/// |FFT| of a real sequence zero-padded to n.
inline std::vector<double> fft_magnitude(std::span<const double> x, std::size_t n) {
  decorr::RealFft fft(n);
  std::vector<double> in(n, 0.0);
  std::copy_n(x.begin(), std::min(n, x.size()), in.begin());
  std::vector<std::complex<double>> X(fft.bins());
  fft.forward(in, X);
  std::vector<double> mag(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) mag[k] = std::abs(X[k]);
  return mag;
}

inline std::vector<std::complex<double>> fft_complex(std::span<const double> x, std::size_t n) {
  decorr::RealFft fft(n);
  std::vector<double> in(n, 0.0);
  std::copy_n(x.begin(), std::min(n, x.size()), in.begin());
  std::vector<std::complex<double>> X(fft.bins());
  fft.forward(in, X);
  return X;
}

}  // namespace test_util
