#pragma once

// Deterministic test signals, all normalized to -20 dBFS RMS.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "audio_buffer.hpp"
#include "error.hpp"
#include "fft.hpp"
#include "rng.hpp"

namespace decorr {

enum class SignalType { White, Pink, Sine, Sweep, Speechlike };

struct SignalKind {
  SignalType type = SignalType::White;
  double f0_hz = 1000.0;  // sine frequency or sweep start
  double f1_hz = 1000.0;  // sweep end

  static SignalKind white() { return {SignalType::White}; }
  static SignalKind pink() { return {SignalType::Pink}; }
  static SignalKind speechlike() { return {SignalType::Speechlike}; }
  static SignalKind sine(double f) { return {SignalType::Sine, f, f}; }
  static SignalKind sweep(double f0, double f1) { return {SignalType::Sweep, f0, f1}; }
};

inline constexpr double kSynthRms = 0.1;  // -20 dBFS

namespace detail {
inline void normalize_rms(std::vector<double>& x, double target) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  const double rms = std::sqrt(acc / static_cast<double>(x.size()));
  if (rms > 0.0)
    for (double& v : x) v *= target / rms;
}

inline std::vector<double> white_noise(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.next_gaussian();
  return x;
}

/// Gaussian noise with power density ~ 1/f (-3 dB/octave), shaped in the
/// frequency domain over the whole buffer. DC is removed.
inline std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  auto x = white_noise(n, rng);
  if (n < 2) return x;
  RealFft fft(n);
  std::vector<std::complex<double>> X(fft.bins());
  fft.forward(x, X);
  X[0] = 0.0;
  for (std::size_t k = 1; k < X.size(); ++k) X[k] /= std::sqrt(static_cast<double>(k));
  fft.inverse(X, x);
  return x;
}
}  // namespace detail

inline AudioBuffer synth_signal(const SignalKind& kind, double duration_s, double sample_rate,
                                std::uint64_t seed) {
  require(duration_s > 0.0, "duration must be positive");
  require(sample_rate > 0.0, "sample rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  require(n >= 1, "duration shorter than one sample");
  const double nyq = 0.5 * sample_rate;
  Rng rng(seed);
  std::vector<double> x;
  switch (kind.type) {
    case SignalType::White:
      x = detail::white_noise(n, rng);
      break;
    case SignalType::Pink:
      x = detail::pink_noise(n, rng);
      break;
    case SignalType::Speechlike: {
      x = detail::pink_noise(n, rng);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        x[i] *= 0.55 - 0.45 * std::cos(2.0 * std::numbers::pi * 4.0 * t);
      }
      break;
    }
    case SignalType::Sine: {
      require(kind.f0_hz > 0.0 && kind.f0_hz < nyq, "sine frequency must lie in (0, fs/2)");
      x.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(2.0 * std::numbers::pi * kind.f0_hz * static_cast<double>(i) / sample_rate);
      break;
    }
    case SignalType::Sweep: {
      require(kind.f0_hz > 0.0 && kind.f1_hz > 0.0 && kind.f0_hz < nyq && kind.f1_hz < nyq,
              "sweep frequencies must lie in (0, fs/2)");
      x.resize(n);
      const double T = duration_s;
      const double ratio = kind.f1_hz / kind.f0_hz;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        double phase;
        if (std::abs(ratio - 1.0) < 1e-12) {
          phase = 2.0 * std::numbers::pi * kind.f0_hz * t;
        } else {
          const double k = std::log(ratio);
          phase = 2.0 * std::numbers::pi * kind.f0_hz * T / k * (std::exp(t / T * k) - 1.0);
        }
        x[i] = std::sin(phase);
      }
      break;
    }
  }
  detail::normalize_rms(x, kSynthRms);
  return mono(std::move(x), sample_rate);
}

inline std::string to_string(SignalType t) {
  switch (t) {
    case SignalType::White: return "white";
    case SignalType::Pink: return "pink";
    case SignalType::Sine: return "sine";
    case SignalType::Sweep: return "sweep";
    case SignalType::Speechlike: return "speechlike";
  }
  return "unknown";
}

}  // namespace decorr
