#pragma once

// Stereo echo-path identification harness: synthetic room responses, a
// two-channel NLMS adaptive filter and normalized misalignment tracking.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "audio_buffer.hpp"
#include "decorrelators.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "signals.hpp"

namespace decorr {

struct RoomConfig {
  std::size_t rir_length = 512;
  double decay = 1000.0;   // amplitude time constant, samples; may be +inf
  double sparsity = 0.1;   // probability of a tap being non-zero
};

inline void validate(const RoomConfig& c) {
  require(c.rir_length >= 32, "impulse response length must be >= 32");
  require(c.decay > 0.0, "decay must be positive");
  require(c.sparsity > 0.0 && c.sparsity <= 1.0, "sparsity must lie in (0, 1]");
}

struct StereoRir {
  std::vector<double> left;   // left loudspeaker -> microphone
  std::vector<double> right;  // right loudspeaker -> microphone
};

namespace detail {
inline std::vector<double> sparse_decaying_taps(const RoomConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> h(c.rir_length, 0.0);
  for (std::size_t n = 0; n < h.size(); ++n) {
    const bool active = rng.next_unit() < c.sparsity;
    const double g = rng.next_gaussian();
    if (active) h[n] = g * std::exp(-static_cast<double>(n) / c.decay);
  }
  if (std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; })) h[0] = 1.0;
  const double e = std::inner_product(h.begin(), h.end(), h.begin(), 0.0);
  for (double& v : h) v /= std::sqrt(e);
  return h;
}
}  // namespace detail

/// Sparse, exponentially decaying random responses of unit energy.
inline StereoRir synth_rir(const RoomConfig& config, std::uint64_t seed) {
  validate(config);
  return {detail::sparse_decaying_taps(config, derive_seed(seed, 0)),
          detail::sparse_decaying_taps(config, derive_seed(seed, 1))};
}

struct NlmsConfig {
  std::size_t filter_length = 512;     // taps per channel
  double step_size = 0.5;
  double regularization = 1e-6;
  std::optional<double> sensor_noise_db = -40.0;  // relative to echo power
  std::size_t block = 1024;            // misalignment reporting period
};

struct MisalignmentTrace {
  std::size_t block = 1024;
  std::vector<double> misalignment_db;

  double final_db() const {
    return misalignment_db.empty() ? 0.0 : misalignment_db.back();
  }
};

namespace detail {
/// Circular history of one input channel, stored twice so the most recent
/// `length` samples are always contiguous (newest first).
class History {
 public:
  explicit History(std::size_t length) : n_(length), buf_(2 * length, 0.0) {}
  void push(double v) {
    pos_ = (pos_ == 0 ? n_ : pos_) - 1;
    buf_[pos_] = v;
    buf_[pos_ + n_] = v;
  }
  std::span<const double> recent() const { return {buf_.data() + pos_, n_}; }
  double oldest() const { return buf_[pos_ + n_ - 1]; }

 private:
  std::size_t n_;
  std::size_t pos_ = 0;
  std::vector<double> buf_;
};

inline double misalignment_db(const StereoRir& h, std::span<const double> est_l,
                              std::span<const double> est_r) {
  double err = 0.0, ref = 0.0;
  auto accumulate = [&](const std::vector<double>& truth, std::span<const double> est) {
    for (std::size_t i = 0; i < est.size(); ++i) {
      const double t = i < truth.size() ? truth[i] : 0.0;
      err += (t - est[i]) * (t - est[i]);
      ref += t * t;
    }
    for (std::size_t i = est.size(); i < truth.size(); ++i) {
      err += truth[i] * truth[i];
      ref += truth[i] * truth[i];
    }
  };
  accumulate(h.left, est_l);
  accumulate(h.right, est_r);
  return 10.0 * std::log10(err / ref);
}

inline std::vector<double> convolve_causal(std::span<const double> x, std::span<const double> h) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const std::size_t taps = std::min(h.size(), n + 1);
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += h[k] * x[n - k];
    y[n] = acc;
  }
  return y;
}
}  // namespace detail

/// Simulates microphone = far_L * h_L + far_R * h_R (+ sensor noise) and
/// identifies both paths with a two-channel NLMS filter. Misalignment
/// 10 log10(|h - h^|^2 / |h|^2) over the stacked responses is recorded
/// every `block` samples. Throws ErrorKind::Numeric above +20 dB.
inline MisalignmentTrace run_stereo_nlms(const AudioBuffer& far, const StereoRir& rirs,
                                         const NlmsConfig& cfg, std::uint64_t seed) {
  require(far.channels() == 2, "far-end signal must be stereo");
  require(cfg.filter_length >= std::max(rirs.left.size(), rirs.right.size()),
          "filter length must cover the impulse responses");
  require(cfg.step_size >= 0.0 && cfg.step_size <= 1.0, "step size must lie in [0, 1]");
  require(cfg.regularization >= 0.0, "regularization must be >= 0");
  require(cfg.block >= 1, "block must be >= 1");

  const auto xl = far.channel(0);
  const auto xr = far.channel(1);
  const auto el = detail::convolve_causal(xl, rirs.left);
  const auto er = detail::convolve_causal(xr, rirs.right);
  std::vector<double> mic(xl.size());
  double echo_power = 0.0;
  for (std::size_t n = 0; n < mic.size(); ++n) {
    mic[n] = el[n] + er[n];
    echo_power += mic[n] * mic[n];
  }
  if (cfg.sensor_noise_db && !mic.empty()) {
    echo_power /= static_cast<double>(mic.size());
    const double sigma = std::sqrt(echo_power * std::pow(10.0, *cfg.sensor_noise_db / 10.0));
    Rng rng(seed);
    for (double& v : mic) v += sigma * rng.next_gaussian();
  }

  const std::size_t M = cfg.filter_length;
  std::vector<double> wl(M, 0.0), wr(M, 0.0);
  detail::History hl(M), hr(M);
  double energy = 0.0;

  MisalignmentTrace trace;
  trace.block = cfg.block;
  for (std::size_t n = 0; n < mic.size(); ++n) {
    energy -= hl.oldest() * hl.oldest() + hr.oldest() * hr.oldest();
    hl.push(xl[n]);
    hr.push(xr[n]);
    energy += xl[n] * xl[n] + xr[n] * xr[n];
    const auto vl = hl.recent();
    const auto vr = hr.recent();
    if ((n + 1) % cfg.block == 0) {
      // Re-sum to cancel drift of the running energy.
      energy = std::inner_product(vl.begin(), vl.end(), vl.begin(), 0.0) +
               std::inner_product(vr.begin(), vr.end(), vr.begin(), 0.0);
    }
    const double yhat = std::inner_product(wl.begin(), wl.end(), vl.begin(), 0.0) +
                        std::inner_product(wr.begin(), wr.end(), vr.begin(), 0.0);
    const double e = mic[n] - yhat;
    const double g = cfg.step_size * e / (std::max(energy, 0.0) + cfg.regularization);
    for (std::size_t i = 0; i < M; ++i) {
      wl[i] += g * vl[i];
      wr[i] += g * vr[i];
    }
    if ((n + 1) % cfg.block == 0) {
      const double m = detail::misalignment_db(rirs, wl, wr);
      if (!std::isfinite(m) || m > 20.0)
        fail(ErrorKind::Numeric, "adaptive filter diverged (misalignment " + std::to_string(m) + " dB)");
      trace.misalignment_db.push_back(m);
    }
  }
  return trace;
}

/// The mono far-end scenario: one pink-noise source played through both
/// loudspeakers, optionally decorrelated by a preset first.
struct AecScenario {
  double duration_s = 10.0;
  double sample_rate = 44100.0;
  SignalKind source = SignalKind::pink();
  RoomConfig room{};
  NlmsConfig nlms{};
};

struct AecDemoResult {
  MisalignmentTrace baseline;
  std::optional<MisalignmentTrace> processed;

  std::optional<double> improvement_db() const {
    if (!processed) return std::nullopt;
    return baseline.final_db() - processed->final_db();
  }
};

inline AecDemoResult aec_demo(const std::optional<PresetId>& preset_id, std::uint64_t seed,
                              const AecScenario& sc = {}) {
  const auto far_mono = synth_signal(sc.source, sc.duration_s, sc.sample_rate, derive_seed(seed, 1));
  const auto rirs = synth_rir(sc.room, derive_seed(seed, 2));
  const auto far = to_stereo(far_mono);
  AecDemoResult r;
  r.baseline = run_stereo_nlms(far, rirs, sc.nlms, derive_seed(seed, 3));
  if (preset_id) {
    const auto processed = apply_preset(far, *preset_id, derive_seed(seed, 4));
    r.processed = run_stereo_nlms(processed, rirs, sc.nlms, derive_seed(seed, 3));
  }
  return r;
}

}  // namespace decorr
