#pragma once

// The proposed SCAL + masked-noise pipeline, two baseline decorrelators
// (smoothed absolute value non-linearity and a time-varying first-order
// allpass) and the P1..P6 evaluation presets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "audio_buffer.hpp"
#include "error.hpp"
#include "masked_noise.hpp"
#include "rng.hpp"
#include "scal.hpp"

namespace decorr {

// ---------------------------------------------------------------------------
// Smoothed absolute value

struct SmoothedAbsConfig {
  double alpha = 0.3;
  double c_factor = 0.65;
  /// When set, sigma is a running RMS over this many seconds instead of the
  /// whole-buffer standard deviation.
  std::optional<double> streaming_window_s{};
};

namespace detail {
inline double stddev(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

/// Trailing RMS over `window` samples (shorter at the start).
inline std::vector<double> running_rms(std::span<const double> x, std::size_t window) {
  std::vector<double> out(x.size());
  double acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    acc += x[n] * x[n];
    if (n >= window) acc -= x[n - window] * x[n - window];
    const auto count = static_cast<double>(std::min(n + 1, window));
    out[n] = std::sqrt(std::max(acc, 0.0) / count);
  }
  return out;
}
}  // namespace detail

/// x~(n) = x(n) + a sqrt(x(n)^2 + c^2), c = c_factor * sigma_x. Channel c
/// uses a = +alpha for even c and -alpha for odd c, so identical channels
/// diverge.
inline AudioBuffer smoothed_abs(const AudioBuffer& input, const SmoothedAbsConfig& config) {
  require(config.alpha >= 0.0, "smoothed-abs alpha must be >= 0");
  require(config.c_factor >= 0.0, "c factor must be >= 0");
  AudioBuffer out = input;
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const double a = (c % 2 == 0) ? config.alpha : -config.alpha;
    const auto x = input.channel(c);
    auto y = out.channel(c);
    if (config.streaming_window_s) {
      const auto win = std::max<std::size_t>(
          1, static_cast<std::size_t>(*config.streaming_window_s * input.sample_rate()));
      const auto sigma = detail::running_rms(x, win);
      for (std::size_t n = 0; n < x.size(); ++n) {
        const double cc = config.c_factor * sigma[n];
        y[n] = x[n] + a * std::sqrt(x[n] * x[n] + cc * cc);
      }
    } else {
      const double cc = config.c_factor * detail::stddev(x);
      for (std::size_t n = 0; n < x.size(); ++n)
        y[n] = x[n] + a * std::sqrt(x[n] * x[n] + cc * cc);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Time-varying first-order allpass

struct FirstOrderAllpassConfig {
  double alpha_min = -0.985;
  double walk_step = 0.01;  // per-sample bound of the alpha random walk
};

/// y(n) = a(n) x(n) + x(n-1) - a(n) y(n-1), with a(n) a bounded random walk
/// in [alpha_min, 0] starting at alpha_min/2. Channel c draws from
/// derive_seed(seed, c).
inline std::vector<double> first_order_allpass_channel(std::span<const double> x,
                                                       const FirstOrderAllpassConfig& config,
                                                       std::uint64_t seed) {
  require(config.alpha_min > -1.0 && config.alpha_min < 0.0,
          "alpha_min must lie in (-1, 0)");
  require(config.walk_step >= 0.0, "walk step must be >= 0");
  Rng rng(seed);
  std::vector<double> y(x.size());
  double a = 0.5 * config.alpha_min;
  double x1 = 0.0, y1 = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (n > 0)
      a = std::clamp(a + rng.next_uniform(-config.walk_step, config.walk_step),
                     config.alpha_min, 0.0);
    y[n] = a * x[n] + x1 - a * y1;
    x1 = x[n];
    y1 = y[n];
  }
  return y;
}

inline AudioBuffer first_order_allpass(const AudioBuffer& input,
                                       const FirstOrderAllpassConfig& config,
                                       std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < input.channels(); ++c)
    out.push_back(first_order_allpass_channel(input.channel(c), config, derive_seed(seed, c)));
  return AudioBuffer(std::move(out), input.sample_rate());
}

// ---------------------------------------------------------------------------
// Proposed pipeline

struct ProposedConfig {
  ScalConfig scal{};
  NoiseConfig noise{};
};

inline ProposedConfig make_proposed(double beta, double gamma) {
  ProposedConfig c;
  c.scal.beta = beta;
  c.noise.gamma = gamma;
  return c;
}

/// SCAL first, then masked noise computed on the SCAL output.
inline AudioBuffer proposed_process(const AudioBuffer& input, const ProposedConfig& config,
                                    std::uint64_t seed) {
  const auto shaped = scal_process(input, config.scal, derive_seed(seed, 0x5CA1));
  return inject_noise(shaped, config.noise, derive_seed(seed, 0x9015E));
}

// ---------------------------------------------------------------------------
// Presets

enum class Algorithm { Proposed, SmoothedAbs, FirstOrderAllpass };

enum class PresetId { P1 = 1, P2, P3, P4, P5, P6 };

struct PresetConfig {
  PresetId id = PresetId::P1;
  Algorithm algorithm = Algorithm::Proposed;
  double beta = 0.0;       // proposed: tilt
  double gamma = 0.0;      // proposed: noise gain
  double alpha = 0.0;      // smoothed abs
  double alpha_min = 0.0;  // first-order allpass
};

inline constexpr std::array<PresetConfig, 6> kPresets{{
    {PresetId::P1, Algorithm::Proposed, 0.62, 0.6, 0.0, 0.0},
    {PresetId::P2, Algorithm::Proposed, 0.36, 1.0, 0.0, 0.0},
    {PresetId::P3, Algorithm::Proposed, 0.18, 1.67, 0.0, 0.0},
    {PresetId::P4, Algorithm::SmoothedAbs, 0.0, 0.0, 0.3, 0.0},
    {PresetId::P5, Algorithm::SmoothedAbs, 0.0, 0.0, 0.6, 0.0},
    {PresetId::P6, Algorithm::FirstOrderAllpass, 0.0, 0.0, 0.0, -0.985},
}};

inline const PresetConfig& preset(PresetId id) {
  return kPresets.at(static_cast<std::size_t>(id) - 1);
}

inline std::string to_string(PresetId id) {
  return "P" + std::to_string(static_cast<int>(id));
}

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Proposed: return "proposed";
    case Algorithm::SmoothedAbs: return "smoothed_abs";
    case Algorithm::FirstOrderAllpass: return "first_order_allpass";
  }
  return "unknown";
}

inline std::optional<PresetId> parse_preset(std::string_view name) {
  for (const auto& p : kPresets)
    if (name == to_string(p.id)) return p.id;
  return std::nullopt;
}

inline AudioBuffer apply_preset(const AudioBuffer& input, const PresetConfig& p,
                                std::uint64_t seed) {
  switch (p.algorithm) {
    case Algorithm::Proposed:
      return proposed_process(input, make_proposed(p.beta, p.gamma), seed);
    case Algorithm::SmoothedAbs:
      return smoothed_abs(input, {.alpha = p.alpha});
    case Algorithm::FirstOrderAllpass:
      return first_order_allpass(input, {.alpha_min = p.alpha_min}, seed);
  }
  fail(ErrorKind::InvalidArgument, "unknown algorithm");
}

inline AudioBuffer apply_preset(const AudioBuffer& input, PresetId id, std::uint64_t seed) {
  return apply_preset(input, preset(id), seed);
}

}  // namespace decorr
