#pragma once

// Inter-channel coherence measurement.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "audio_buffer.hpp"
#include "error.hpp"
#include "fft.hpp"
#include "window.hpp"

namespace decorr {

/// Bark scale B(f) = 13 atan(f/1316) + 3.5 atan(f^2/7500^2).
inline double bark(double f_hz) {
  return 13.0 * std::atan(f_hz / 1316.0) +
         3.5 * std::atan((f_hz * f_hz) / (7500.0 * 7500.0));
}

/// dB/df, analytic.
inline double bark_derivative(double f_hz) {
  const double u = f_hz / 1316.0;
  const double v = (f_hz * f_hz) / (7500.0 * 7500.0);
  return 13.0 / 1316.0 / (1.0 + u * u) +
         3.5 * (2.0 * f_hz / (7500.0 * 7500.0)) / (1.0 + v * v);
}

/// Frequency at which bark() equals `z`, by bisection over [0, f_max].
inline double inverse_bark(double z, double f_max = 1.0e6) {
  if (z <= 0.0) return 0.0;
  double lo = 0.0, hi = f_max;
  if (bark(hi) <= z) return hi;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (bark(mid) < z ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Equivalent SNR (1/g2 - 1)^-1 in dB, clipped to [-60, +60].
inline double equivalent_snr_db(double gamma_sq) {
  constexpr double kClip = 60.0;
  if (!(gamma_sq > 0.0)) return -kClip;
  if (gamma_sq >= 1.0) return kClip;
  const double snr = gamma_sq / (1.0 - gamma_sq);
  return std::clamp(10.0 * std::log10(snr), -kClip, kClip);
}

inline std::vector<double> equivalent_snr_db(std::span<const double> gamma_sq) {
  std::vector<double> out(gamma_sq.size());
  std::transform(gamma_sq.begin(), gamma_sq.end(), out.begin(),
                 [](double g) { return equivalent_snr_db(g); });
  return out;
}

/// Sum_f B'(f) g2(f) / Sum_f B'(f).
inline double bark_weighted_coherence(std::span<const double> gamma_sq,
                                      std::span<const double> freq_hz) {
  require(gamma_sq.size() == freq_hz.size() && !gamma_sq.empty(),
          "coherence and frequency grid must have equal, non-zero length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < gamma_sq.size(); ++i) {
    const double w = bark_derivative(freq_hz[i]);
    num += w * gamma_sq[i];
    den += w;
  }
  return num / den;
}

struct WelchConfig {
  std::size_t segment_length = 1024;
  double overlap = 0.5;
};

inline void validate(const WelchConfig& c) {
  require(c.segment_length >= 16 && std::has_single_bit(c.segment_length),
          "Welch segment length must be a power of two >= 16");
  require(c.overlap >= 0.0 && c.overlap < 1.0, "Welch overlap must lie in [0, 1)");
}

struct BandMean {
  int band = 0;  // integer Bark band index
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  double mean = 0.0;
};

struct CoherenceReport {
  double sample_rate = 0.0;
  std::vector<double> freq_hz;
  std::vector<double> gamma_sq;
  std::vector<double> snr_db;
  double bark_weighted = 0.0;
  std::size_t n_segments = 0;
  bool degenerate = false;
};

/// Averaged cross-spectra of two equal-length signals.
struct CrossSpectra {
  std::vector<double> freq_hz;
  std::vector<double> sxx;
  std::vector<double> syy;
  std::vector<std::complex<double>> sxy;
  std::size_t n_segments = 0;
};

inline std::size_t welch_hop(const WelchConfig& cfg) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(cfg.segment_length) * (1.0 - cfg.overlap))));
}

inline std::size_t welch_segment_count(std::size_t length, const WelchConfig& cfg) {
  if (length < cfg.segment_length) return 0;
  return (length - cfg.segment_length) / welch_hop(cfg) + 1;
}

/// Hann-windowed Welch estimate of Sxx, Syy, Sxy (one-sided grid 0..fs/2).
/// Scale is arbitrary but common to all three spectra.
inline CrossSpectra welch_cross_spectra(std::span<const double> x, std::span<const double> y,
                                        double sample_rate, const WelchConfig& cfg = {}) {
  validate(cfg);
  require(x.size() == y.size(), "signals must have equal length");
  const std::size_t L = cfg.segment_length;
  const std::size_t K = welch_segment_count(x.size(), cfg);
  require(K >= 1, "signal shorter than one Welch segment");
  const auto win = hann_window(L);
  const std::size_t hop = welch_hop(cfg);
  RealFft fft(L);
  const std::size_t B = fft.bins();

  CrossSpectra s;
  s.n_segments = K;
  s.freq_hz.resize(B);
  for (std::size_t k = 0; k < B; ++k)
    s.freq_hz[k] = static_cast<double>(k) * sample_rate / static_cast<double>(L);
  s.sxx.assign(B, 0.0);
  s.syy.assign(B, 0.0);
  s.sxy.assign(B, {0.0, 0.0});

  std::vector<double> seg(L);
  std::vector<std::complex<double>> X(B), Y(B);
  for (std::size_t m = 0; m < K; ++m) {
    const std::size_t start = m * hop;
    for (std::size_t i = 0; i < L; ++i) seg[i] = win[i] * x[start + i];
    fft.forward(seg, X);
    for (std::size_t i = 0; i < L; ++i) seg[i] = win[i] * y[start + i];
    fft.forward(seg, Y);
    for (std::size_t k = 0; k < B; ++k) {
      s.sxx[k] += std::norm(X[k]);
      s.syy[k] += std::norm(Y[k]);
      s.sxy[k] += X[k] * std::conj(Y[k]);
    }
  }
  return s;
}

/// Power spectral density (one-sided, units of mean square per Hz) via
/// Welch averaging.
inline std::vector<double> welch_psd(std::span<const double> x, double sample_rate,
                                     const WelchConfig& cfg = {}) {
  const auto s = welch_cross_spectra(x, x, sample_rate, cfg);
  const auto win = hann_window(cfg.segment_length);
  double wss = 0.0;
  for (double w : win) wss += w * w;
  std::vector<double> psd(s.sxx.size());
  const double scale = 1.0 / (sample_rate * wss * static_cast<double>(s.n_segments));
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const bool edge = k == 0 || k + 1 == psd.size();
    psd[k] = s.sxx[k] * scale * (edge ? 1.0 : 2.0);
  }
  return psd;
}

/// Squared coherence |Sxy|^2 / (Sxx Syy) with Welch-averaged spectra, the
/// equivalent SNR per bin, and the Bark-weighted scalar. Bins whose
/// Sxx*Syy falls below 1e-20 of the product of total powers report 0.
inline CoherenceReport coherence(std::span<const double> x, std::span<const double> y,
                                 double sample_rate, const WelchConfig& cfg = {}) {
  validate(cfg);
  require(x.size() == y.size(), "signals must have equal length");
  require(welch_segment_count(x.size(), cfg) >= 4,
          "signals must span at least four Welch segments");
  const auto s = welch_cross_spectra(x, y, sample_rate, cfg);

  CoherenceReport r;
  r.sample_rate = sample_rate;
  r.freq_hz = s.freq_hz;
  r.n_segments = s.n_segments;
  r.gamma_sq.assign(s.sxx.size(), 0.0);

  double total_x = 0.0, total_y = 0.0;
  for (std::size_t k = 0; k < s.sxx.size(); ++k) {
    total_x += s.sxx[k];
    total_y += s.syy[k];
  }
  r.degenerate = !(total_x > 0.0) || !(total_y > 0.0);
  if (!r.degenerate) {
    const double floor = 1e-20 * total_x * total_y;
    for (std::size_t k = 0; k < s.sxx.size(); ++k) {
      const double den = s.sxx[k] * s.syy[k];
      if (den <= floor) continue;
      r.gamma_sq[k] = std::clamp(std::norm(s.sxy[k]) / den, 0.0, 1.0);
    }
  }
  r.snr_db = equivalent_snr_db(r.gamma_sq);
  r.bark_weighted = r.degenerate ? 0.0 : bark_weighted_coherence(r.gamma_sq, r.freq_hz);
  return r;
}

inline CoherenceReport coherence(const AudioBuffer& x, const AudioBuffer& y,
                                 const WelchConfig& cfg = {}) {
  require(x.channels() == 1 && y.channels() == 1, "coherence expects mono buffers");
  if (x.sample_rate() != y.sample_rate())
    fail(ErrorKind::Format, "sample rates differ");
  if (x.frames() != y.frames()) fail(ErrorKind::Format, "signal lengths differ");
  return coherence(x.channel(0), y.channel(0), x.sample_rate(), cfg);
}

/// Left/right coherence of a stereo buffer.
inline CoherenceReport stereo_coherence(const AudioBuffer& stereo, const WelchConfig& cfg = {}) {
  require(stereo.channels() == 2, "expected a stereo buffer");
  return coherence(stereo.channel(0), stereo.channel(1), stereo.sample_rate(), cfg);
}

/// Mean of `values` over integer Bark bands [b, b+1). Empty bands are skipped.
inline std::vector<BandMean> bark_band_means(std::span<const double> values,
                                             std::span<const double> freq_hz) {
  require(values.size() == freq_hz.size(), "values and grid must have equal length");
  std::vector<BandMean> out;
  if (freq_hz.empty()) return out;
  const int n_bands = static_cast<int>(std::floor(bark(freq_hz.back()))) + 1;
  std::vector<double> sum(static_cast<std::size_t>(n_bands), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(n_bands), 0);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto b = static_cast<std::size_t>(
        std::min<int>(n_bands - 1, static_cast<int>(std::floor(bark(freq_hz[k])))));
    sum[b] += values[k];
    ++count[b];
  }
  for (int b = 0; b < n_bands; ++b) {
    const auto i = static_cast<std::size_t>(b);
    if (count[i] == 0) continue;
    out.push_back({b, inverse_bark(b), inverse_bark(b + 1.0),
                   sum[i] / static_cast<double>(count[i])});
  }
  return out;
}

/// Distortion proxy (NOT a perceptual quality grade): mean over Bark bands of
/// the band-averaged equivalent SNR between a reference and processed signal.
inline double bark_band_snr_db(std::span<const double> reference, std::span<const double> processed,
                               double sample_rate, const WelchConfig& cfg = {}) {
  const auto rep = coherence(reference, processed, sample_rate, cfg);
  const auto bands = bark_band_means(rep.snr_db, rep.freq_hz);
  double acc = 0.0;
  for (const auto& b : bands) acc += b.mean;
  return bands.empty() ? 0.0 : acc / static_cast<double>(bands.size());
}

}  // namespace decorr
