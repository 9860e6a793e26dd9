#pragma once

// Shaped comb-allpass (SCAL) decorrelator.
//
//            alpha (1 - beta z^-1) + z^-N
//   A(z) = --------------------------------
//          1 - alpha beta z^-(N-1) + alpha z^-N
//
// The numerator is the reversed denominator, so |A| = 1 everywhere. alpha sets
// the depth of the phase modulation, beta tilts it toward high frequencies.
// |alpha| (1 + |beta|) < 1 is sufficient for stability.
//
// Each channel is processed with 50%-overlap WOLA. Even and odd frames form
// two parity streams; consecutive frames of one parity are contiguous in time,
// so each stream is one continuous filter whose coefficients change only at
// its own frame boundaries. Parameters follow a per-frame random walk.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "audio_buffer.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "window.hpp"
#include "wola.hpp"

namespace decorr {

struct ScalParams {
  double alpha = 0.0;
  double beta = 0.0;
  int order = 32;

  bool stable() const noexcept {
    return std::abs(alpha) * (1.0 + std::abs(beta)) < 1.0;
  }

  friend bool operator==(const ScalParams&, const ScalParams&) = default;
};

inline void validate(const ScalParams& p) {
  require(p.order >= 2, "SCAL order must be >= 2");
  require(p.beta >= 0.0 && p.beta < 1.0, "SCAL tilt must lie in [0, 1)");
  if (!p.stable())
    fail(ErrorKind::Numeric,
         "unstable SCAL parameters: |alpha|(1+|beta|) = " +
             std::to_string(std::abs(p.alpha) * (1.0 + std::abs(p.beta))) +
             " >= 1");
}

struct ScalConfig {
  double beta = 0.36;
  double r_max = 0.6;
  double epsilon = 0.02;
  int order_min = 32;
  int order_max = 128;
  double initial_alpha = 0.0;
  WindowSpec window{1024, WindowKind::Vorbis};

  /// Largest |alpha| the random walk may reach.
  double alpha_bound() const noexcept {
    return (1.0 - epsilon) / (1.0 + std::abs(beta));
  }
};

inline void validate(const ScalConfig& c) {
  validate_window_length(c.window.length);
  require(c.beta >= 0.0 && c.beta < 1.0, "beta must lie in [0, 1)");
  require(c.r_max >= 0.0 && c.r_max <= 1.0, "r_max must lie in [0, 1]");
  require(c.epsilon > 0.0 && c.epsilon < 1.0, "epsilon must lie in (0, 1)");
  const int quarter = static_cast<int>(c.window.length / 4);
  require(c.order_min >= 2 && c.order_min <= c.order_max && c.order_max <= quarter,
          "order range must satisfy 2 <= min <= max <= L/4");
  require(std::abs(c.initial_alpha) <= c.alpha_bound(),
          "initial alpha outside the stability bound");
}

/// A(e^{jw}) at one normalized angular frequency w (rad/sample).
inline std::complex<double> scal_response_at(const ScalParams& p, double omega) {
  using C = std::complex<double>;
  const C z1 = std::polar(1.0, -omega);
  const C zN = std::polar(1.0, -omega * p.order);
  const C zN1 = std::polar(1.0, -omega * (p.order - 1));
  const C num = p.alpha * (1.0 - p.beta * z1) + zN;
  const C den = 1.0 - p.alpha * p.beta * zN1 + p.alpha * zN;
  return num / den;
}

struct FrequencyResponse {
  std::vector<double> freq_hz;
  std::vector<std::complex<double>> gain;
};

/// Response on `n_points` uniformly spaced frequencies from 0 to fs/2.
inline FrequencyResponse scal_frequency_response(const ScalParams& p,
                                                 std::size_t n_points,
                                                 double sample_rate) {
  validate(p);
  require(n_points >= 2, "need at least two frequency points");
  require(sample_rate > 0.0, "sample rate must be positive");
  FrequencyResponse r;
  r.freq_hz.resize(n_points);
  r.gain.resize(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n_points - 1);
    r.freq_hz[k] = frac * 0.5 * sample_rate;
    r.gain[k] = scal_response_at(p, frac * std::numbers::pi);
  }
  return r;
}

/// One continuous SCAL recursion. Delay lines persist across calls and are
/// not cleared when the order changes.
class ScalFilter {
 public:
  explicit ScalFilter(int max_order = 128)
      : size_(std::bit_ceil(static_cast<std::size_t>(max_order) + 2)),
        mask_(size_ - 1),
        max_order_(max_order),
        x_(size_, 0.0),
        y_(size_, 0.0) {
    require(max_order >= 2, "max order must be >= 2");
  }

  int max_order() const noexcept { return max_order_; }

  void reset() {
    std::fill(x_.begin(), x_.end(), 0.0);
    std::fill(y_.begin(), y_.end(), 0.0);
    pos_ = 0;
  }

  /// y(n) = a x(n) - ab x(n-1) + x(n-N) + ab y(n-N+1) - a y(n-N)
  void process(const ScalParams& p, std::span<const double> in, std::span<double> out) {
    validate(p);
    require(p.order <= max_order_, "SCAL order exceeds delay-line capacity");
    require(in.size() == out.size(), "segment size mismatch");
    const double a = p.alpha;
    const double ab = p.alpha * p.beta;
    const auto N = static_cast<std::size_t>(p.order);
    bool finite = true;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double xn = in[i];
      const double y = a * xn - ab * x_[(pos_ - 1) & mask_] + x_[(pos_ - N) & mask_] +
                       ab * y_[(pos_ - N + 1) & mask_] - a * y_[(pos_ - N) & mask_];
      x_[pos_] = xn;
      y_[pos_] = y;
      pos_ = (pos_ + 1) & mask_;
      out[i] = y;
      finite = finite && std::isfinite(y);
    }
    if (!finite) fail(ErrorKind::Numeric, "SCAL filter produced a non-finite sample");
  }

 private:
  std::size_t size_;
  std::size_t mask_;
  int max_order_;
  std::size_t pos_ = 0;
  std::vector<double> x_;
  std::vector<double> y_;
};

/// Random-walk update of one stream's parameters: alpha steps by
/// U[-r_max, r_max] and is clamped to +-alpha_bound(); the order is redrawn
/// uniformly from [order_min, order_max].
inline ScalParams update_params(const ScalParams& previous, const ScalConfig& config, Rng& rng) {
  const double bound = config.alpha_bound();
  const double step = rng.next_uniform(-config.r_max, config.r_max);
  ScalParams next;
  next.beta = config.beta;
  next.alpha = std::clamp(previous.alpha + step, -bound, bound);
  next.order = static_cast<int>(rng.next_int(config.order_min, config.order_max));
  return next;
}

/// Filter memory and parameters for one channel (both parity streams).
///
/// The comb term alone would delay each frame by its own order N, so a new N
/// per frame would act as a time-varying bulk delay. Each frame's windowed
/// input is therefore pre-delayed by (order_max - N): every stream has the
/// constant bulk delay order_max, and the synthesis window is applied at that
/// delayed position. Pre-delay discontinuities fall where the window is ~0.
class ScalStreamState {
 public:
  ScalStreamState(const ScalConfig& config, std::uint64_t seed)
      : config_(config),
        filters_{ScalFilter(config.order_max), ScalFilter(config.order_max)},
        rng_(seed) {
    validate(config_);
    for (auto& p : params_) {
      p.alpha = config.initial_alpha;
      p.beta = config.beta;
      p.order = config.order_min;
    }
  }

  const ScalConfig& config() const noexcept { return config_; }

  /// Constant latency of the processed output, in samples.
  std::size_t latency() const noexcept { return static_cast<std::size_t>(config_.order_max); }

  const ScalParams& params(int parity) const {
    return params_.at(static_cast<std::size_t>(parity));
  }

  /// Draws the parameters for the next frame of stream `parity`.
  const ScalParams& advance(int parity) {
    auto& p = params_.at(static_cast<std::size_t>(parity));
    p = update_params(p, config_, rng_);
    return p;
  }

  ScalFilter& filter(int parity) { return filters_.at(static_cast<std::size_t>(parity)); }

 private:
  /// Sums the two streams. Over each overlap region the effective weights
  /// w_a^2 + w_b^2 = 1 are amplitude-complementary, so partially correlated
  /// streams lose power by 1 - 2 w_a^2 w_b^2 (1 - C). C is estimated per
  /// region from the two contributions and the loss is undone sample by
  /// sample. Regions between frames with equal parameters are left alone.
  void crossfade(const std::array<std::vector<double>, 2>& part,
                 const std::vector<ScalParams>& frame_params, std::int64_t k0,
                 const std::vector<double>& window, std::vector<double>& out) const {
    const std::size_t L = window.size();
    const std::size_t H = L / 2;
    const auto D = static_cast<std::int64_t>(latency());
    const auto len = static_cast<std::int64_t>(out.size());
    double w4 = 0.0, w22 = 0.0;
    for (std::size_t i = 0; i < H; ++i) {
      const double a = window[H + i] * window[H + i], b = window[i] * window[i];
      w4 += a * a;
      w22 += a * b;
    }
    for (std::int64_t n = 0; n < len; ++n) {
      const auto i = static_cast<std::size_t>(n);
      out[i] = part[0][i] + part[1][i];
    }
    // Region m: second half of frame m-1 and first half of frame m.
    for (std::size_t f = 1; f < frame_params.size(); ++f) {
      const ScalParams& pa = frame_params[f - 1];
      const ScalParams& pb = frame_params[f];
      if (pa.alpha == pb.alpha && pa.order == pb.order) continue;
      const std::int64_t m = k0 + static_cast<std::int64_t>(f);
      const std::int64_t start = m * static_cast<std::int64_t>(H) + D;
      const auto& ca = part[static_cast<std::size_t>(WolaLayout::parity(m - 1))];
      const auto& cb = part[static_cast<std::size_t>(WolaLayout::parity(m))];
      double saa = 0.0, sbb = 0.0, sab = 0.0;
      for (std::size_t i = 0; i < H; ++i) {
        const std::int64_t n = start + static_cast<std::int64_t>(i);
        if (n < 0 || n >= len) continue;
        const auto j = static_cast<std::size_t>(n);
        saa += ca[j] * ca[j];
        sbb += cb[j] * cb[j];
        sab += ca[j] * cb[j];
      }
      if (!(saa > 0.0) || !(sbb > 0.0)) continue;
      const double c = std::clamp(sab / std::sqrt(saa * sbb) * w4 / w22, 0.0, 1.0);
      for (std::size_t i = 0; i < H; ++i) {
        const std::int64_t n = start + static_cast<std::int64_t>(i);
        if (n < 0 || n >= len) continue;
        const double a = window[H + i] * window[H + i], b = window[i] * window[i];
        out[static_cast<std::size_t>(n)] /= std::sqrt(1.0 - 2.0 * a * b * (1.0 - c));
      }
    }
  }

 public:

  /// Processes a whole channel. Output has the input's length and lags it by
  /// latency() samples.
  std::vector<double> process(std::span<const double> x,
                              std::vector<ScalParams>* history = nullptr) {
    const WolaLayout layout{config_.window};
    const std::size_t L = layout.length();
    const auto H = static_cast<std::int64_t>(layout.hop());
    const auto D = static_cast<std::int64_t>(latency());
    const auto len = static_cast<std::int64_t>(x.size());
    const auto window = make_window(config_.window);
    const std::int64_t k0 = WolaLayout::first_frame();
    const std::int64_t k1 = layout.last_frame(x.size());
    std::vector<double> out(x.size(), 0.0);
    if (k1 < k0) return out;
    std::array<std::vector<double>, 2> part{out, out};

    // Parameters are drawn in frame order so both streams share one RNG
    // deterministically.
    std::vector<ScalParams> frame_params;
    for (std::int64_t k = k0; k <= k1; ++k) frame_params.push_back(advance(WolaLayout::parity(k)));
    if (history) *history = frame_params;

    // Stream time axis is offset by H so frame -1 starts at index >= 0.
    const auto stream_len = static_cast<std::size_t>(len + H + D + static_cast<std::int64_t>(L));
    std::vector<double> u(stream_len), y(stream_len);
    for (int parity = 0; parity < 2; ++parity) {
      std::fill(u.begin(), u.end(), 0.0);
      std::vector<std::pair<std::size_t, const ScalParams*>> switches;
      for (std::int64_t k = k0; k <= k1; ++k) {
        if (WolaLayout::parity(k) != parity) continue;
        const ScalParams& p = frame_params[static_cast<std::size_t>(k - k0)];
        const std::int64_t base = k * H + H + D - p.order;
        for (std::size_t i = 0; i < L; ++i) {
          const std::int64_t n = k * H + static_cast<std::int64_t>(i);
          if (n >= 0 && n < len)
            u[static_cast<std::size_t>(base) + i] += window[i] * x[static_cast<std::size_t>(n)];
        }
        switches.emplace_back(static_cast<std::size_t>(base), &p);
      }
      std::fill(y.begin(), y.end(), 0.0);
      auto& f = filter(parity);
      for (std::size_t s = 0; s < switches.size(); ++s) {
        const std::size_t from = switches[s].first;
        const std::size_t to = s + 1 < switches.size() ? switches[s + 1].first : stream_len;
        if (to <= from) continue;
        f.process(*switches[s].second, std::span<const double>(u).subspan(from, to - from),
                  std::span<double>(y).subspan(from, to - from));
      }
      for (std::int64_t k = k0; k <= k1; ++k) {
        if (WolaLayout::parity(k) != parity) continue;
        for (std::size_t i = 0; i < L; ++i) {
          const std::int64_t n = k * H + D + static_cast<std::int64_t>(i);
          if (n >= 0 && n < len)
            part[static_cast<std::size_t>(parity)][static_cast<std::size_t>(n)] =
                window[i] * y[static_cast<std::size_t>(n + H)];
        }
      }
    }
    crossfade(part, frame_params, k0, window, out);
    return out;
  }

 private:
  ScalConfig config_;
  std::array<ScalFilter, 2> filters_;
  std::array<ScalParams, 2> params_{};
  Rng rng_;
};

/// Applies SCAL to one channel.
inline std::vector<double> scal_process_channel(std::span<const double> signal,
                                                const ScalConfig& config,
                                                std::uint64_t seed,
                                                std::vector<ScalParams>* history = nullptr) {
  ScalStreamState state(config, seed);
  return state.process(signal, history);
}

/// Applies SCAL independently to each channel; channel c draws from the
/// sub-stream derive_seed(seed, c).
inline AudioBuffer scal_process(const AudioBuffer& input, const ScalConfig& config,
                                std::uint64_t seed) {
  validate(config);
  require(input.sample_rate() >= 8000.0, "SCAL requires a sample rate >= 8 kHz");
  std::vector<std::vector<double>> out;
  out.reserve(input.channels());
  for (std::size_t c = 0; c < input.channels(); ++c)
    out.push_back(scal_process_channel(input.channel(c), config, derive_seed(seed, c)));
  return AudioBuffer(std::move(out), input.sample_rate());
}

}  // namespace decorr
