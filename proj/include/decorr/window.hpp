#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"

namespace decorr {

enum class WindowKind { Vorbis, Hann };

struct WindowSpec {
  std::size_t length = 1024;
  WindowKind kind = WindowKind::Vorbis;
};

inline void validate_window_length(std::size_t length) {
  if (length < 16 || length % 2 != 0)
    fail(ErrorKind::InvalidArgument,
         "window length must be even and >= 16, got " + std::to_string(length));
}

/// Power-complementary Vorbis window h(n) = sin(pi/2 * sin^2(pi n / L)),
/// n = 0..L-1. Satisfies h(n)^2 + h(n + L/2)^2 = 1.
inline std::vector<double> vorbis_window(std::size_t length) {
  validate_window_length(length);
  std::vector<double> w(length);
  const double L = static_cast<double>(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(n) / L);
    w[n] = std::sin(0.5 * std::numbers::pi * s * s);
  }
  return w;
}

/// Periodic Hann window, used for spectral estimation only.
inline std::vector<double> hann_window(std::size_t length) {
  validate_window_length(length);
  std::vector<double> w(length);
  const double L = static_cast<double>(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(n) / L);
    w[n] = s * s;
  }
  return w;
}

inline std::vector<double> make_window(const WindowSpec& spec) {
  return spec.kind == WindowKind::Vorbis ? vorbis_window(spec.length)
                                         : hann_window(spec.length);
}

}  // namespace decorr
