#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "error.hpp"
#include "window.hpp"

namespace decorr {

/// 50%-overlap weighted overlap-add. The same window is applied on analysis
/// and synthesis, so a Princen-Bradley window sums to unit weight.
struct WolaLayout {
  WindowSpec window{};

  std::size_t length() const noexcept { return window.length; }
  std::size_t hop() const noexcept { return window.length / 2; }

  /// Frame k spans samples [k*hop, k*hop + L). Frame -1 is the leading edge.
  static constexpr std::int64_t first_frame() noexcept { return -1; }
  std::int64_t last_frame(std::size_t signal_length) const noexcept {
    if (signal_length == 0) return -2;
    return static_cast<std::int64_t>((signal_length - 1) / hop());
  }
  static int parity(std::int64_t frame) noexcept {
    return static_cast<int>(((frame % 2) + 2) % 2);
  }
};

template <typename F>
concept WolaTransform = requires(F f, std::int64_t k, std::span<const double> in,
                                 std::span<double> out) {
  f(k, in, out);
};

/// Runs `transform(frame, windowed_in, out)` on every analysis-windowed frame
/// and overlap-adds the synthesis-windowed results. Samples outside the
/// signal are zero. Output has the input's length.
template <WolaTransform Transform>
std::vector<double> wola_process(std::span<const double> signal,
                                 const WolaLayout& layout,
                                 Transform&& transform) {
  validate_window_length(layout.length());
  const auto window = make_window(layout.window);
  const std::size_t L = layout.length();
  const auto H = static_cast<std::int64_t>(layout.hop());
  const auto len = static_cast<std::int64_t>(signal.size());

  std::vector<double> out(signal.size(), 0.0);
  std::vector<double> seg(L), res(L);
  for (std::int64_t k = WolaLayout::first_frame(); k <= layout.last_frame(signal.size()); ++k) {
    const std::int64_t start = k * H;
    for (std::size_t i = 0; i < L; ++i) {
      const std::int64_t n = start + static_cast<std::int64_t>(i);
      seg[i] = (n >= 0 && n < len) ? window[i] * signal[static_cast<std::size_t>(n)] : 0.0;
    }
    std::fill(res.begin(), res.end(), 0.0);
    transform(k, std::span<const double>(seg), std::span<double>(res));
    for (std::size_t i = 0; i < L; ++i) {
      const std::int64_t n = start + static_cast<std::int64_t>(i);
      if (n >= 0 && n < len) out[static_cast<std::size_t>(n)] += window[i] * res[i];
    }
  }
  return out;
}

}  // namespace decorr
