#pragma once

// Masked-noise injection.
//
// A simplified masking model sets, per half-Bark band and per frame, the
// power of noise that may be added: band powers of the analysis frame are
// spread across bands (max of two-sided linear-in-Bark slopes), lowered by a
// fixed offset, attenuated above a roll-off frequency and capped at the
// band's own power. Random-phase noise with that spectrum is overlap-added
// with a power-complementary window and added, one hop late, to the
// untouched input.
//
// Powers are mean-square values: for a stationary signal, band powers sum to
// the signal's mean square regardless of the analysis window.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "audio_buffer.hpp"
#include "error.hpp"
#include "fft.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "window.hpp"
#include "wola.hpp"

namespace decorr {

struct NoiseConfig {
  double gamma = 1.0;  // amplitude gain; added power scales with gamma^2
  WindowSpec window{1024, WindowKind::Vorbis};
  double band_resolution_bark = 0.5;
  double hf_rolloff_start_hz = 2000.0;
  double hf_rolloff_db_per_octave = 6.0;
  double offset_db = 12.0;
  double spread_lower_db_per_bark = 25.0;  // toward lower frequencies
  double spread_upper_db_per_bark = 10.0;  // toward higher frequencies
  double absolute_floor_db = -80.0;        // dB re. full-scale mean square
  std::size_t delay = 0;                   // noise delay in samples; 0 means one hop
};

inline void validate(const NoiseConfig& c, double sample_rate) {
  validate_window_length(c.window.length);
  require(c.gamma >= 0.0 && std::isfinite(c.gamma), "gamma must be >= 0");
  require(c.hf_rolloff_start_hz > 0.0 && c.hf_rolloff_start_hz < 0.5 * sample_rate,
          "roll-off start must lie in (0, fs/2)");
  require(c.band_resolution_bark > 0.0, "band resolution must be positive");
  require(c.spread_lower_db_per_bark > 0.0 && c.spread_upper_db_per_bark > 0.0,
          "spreading slopes must be positive");
}

/// Band partition of an L-point one-sided spectrum.
struct BandLayout {
  double sample_rate = 0.0;
  std::size_t frame_length = 0;
  std::vector<double> edges_hz;      // bands + 1 strictly increasing edges, 0 .. fs/2
  std::vector<std::size_t> band_of_bin;
  std::vector<double> bin_weight;    // 1 at DC/Nyquist, 2 elsewhere (one-sided)
  std::vector<double> weight_sum;    // per band: sum of bin_weight
  std::vector<double> centers_hz;    // per band: Bark-scale midpoint

  std::size_t bands() const noexcept { return edges_hz.size() - 1; }

  double center_hz(std::size_t b) const { return centers_hz.at(b); }
};

inline BandLayout make_band_layout(std::size_t frame_length, double sample_rate,
                                   double resolution_bark = 0.5) {
  validate_window_length(frame_length);
  require(sample_rate > 0.0, "sample rate must be positive");
  BandLayout lay;
  lay.sample_rate = sample_rate;
  lay.frame_length = frame_length;
  const double nyquist = 0.5 * sample_rate;
  const double top = bark(nyquist);
  const auto n_bands = static_cast<std::size_t>(std::ceil(top / resolution_bark - 1e-9));
  lay.edges_hz.push_back(0.0);
  for (std::size_t b = 1; b < n_bands; ++b)
    lay.edges_hz.push_back(inverse_bark(resolution_bark * static_cast<double>(b), nyquist));
  lay.edges_hz.push_back(nyquist);
  for (std::size_t b = 0; b < lay.bands(); ++b)
    lay.centers_hz.push_back(inverse_bark(0.5 * (bark(lay.edges_hz[b]) + bark(lay.edges_hz[b + 1]))));

  const std::size_t bins = frame_length / 2 + 1;
  lay.band_of_bin.resize(bins);
  lay.bin_weight.resize(bins);
  lay.weight_sum.assign(lay.bands(), 0.0);
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(frame_length);
    auto it = std::upper_bound(lay.edges_hz.begin(), lay.edges_hz.end(), f);
    auto b = static_cast<std::size_t>(std::distance(lay.edges_hz.begin(), it)) - 1;
    b = std::min(b, lay.bands() - 1);
    lay.band_of_bin[k] = b;
    lay.bin_weight[k] = (k == 0 || k + 1 == bins) ? 1.0 : 2.0;
    lay.weight_sum[b] += lay.bin_weight[k];
  }
  return lay;
}

struct MaskingCurve {
  std::vector<double> band_edges_hz;
  std::vector<double> threshold;  // per band, mean-square power
};

/// Per-band mean-square power of an already-windowed frame. `window_energy`
/// is the sum of squared window gains (L for an unwindowed frame).
inline std::vector<double> band_powers(std::span<const double> windowed_frame,
                                       double window_energy, const BandLayout& layout,
                                       RealFft& fft) {
  require(windowed_frame.size() == layout.frame_length, "frame length mismatch");
  std::vector<std::complex<double>> X(fft.bins());
  fft.forward(windowed_frame, X);
  std::vector<double> p(layout.bands(), 0.0);
  const double scale = 1.0 / (static_cast<double>(layout.frame_length) * window_energy);
  for (std::size_t k = 0; k < X.size(); ++k)
    p[layout.band_of_bin[k]] += layout.bin_weight[k] * std::norm(X[k]) * scale;
  return p;
}

/// Spreading stage: each band's level in dB is the max over all maskers of
/// masker level minus the configured per-Bark slope. Inputs at or below the
/// absolute floor do not mask. Returns dB values (-inf for no masker).
inline std::vector<double> spread_band_levels_db(std::span<const double> band_power,
                                                 const NoiseConfig& config) {
  const std::size_t nb = band_power.size();
  const double floor_power = std::pow(10.0, config.absolute_floor_db / 10.0);
  const double step = config.band_resolution_bark;
  std::vector<double> out(nb, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < nb; ++j) {
    if (!(band_power[j] > floor_power)) continue;
    const double level = 10.0 * std::log10(band_power[j]);
    for (std::size_t b = 0; b < nb; ++b) {
      const double dz = step * std::abs(static_cast<double>(b) - static_cast<double>(j));
      const double slope = b < j ? config.spread_lower_db_per_bark : config.spread_upper_db_per_bark;
      out[b] = std::max(out[b], level - slope * dz);
    }
  }
  return out;
}

/// Thresholds from band powers: spreading, offset, high-frequency roll-off,
/// cap at the band's own power, zero below the absolute floor.
inline std::vector<double> masking_thresholds(std::span<const double> band_power,
                                              const BandLayout& layout,
                                              const NoiseConfig& config) {
  require(band_power.size() == layout.bands(), "band count mismatch");
  const auto spread = spread_band_levels_db(band_power, config);
  const double floor_power = std::pow(10.0, config.absolute_floor_db / 10.0);
  std::vector<double> t(band_power.size(), 0.0);
  for (std::size_t b = 0; b < t.size(); ++b) {
    if (!(band_power[b] > floor_power)) continue;
    double db = spread[b] - config.offset_db;
    const double fc = layout.center_hz(b);
    if (fc > config.hf_rolloff_start_hz)
      db -= config.hf_rolloff_db_per_octave * std::log2(fc / config.hf_rolloff_start_hz);
    t[b] = std::min(std::pow(10.0, db / 10.0), band_power[b]);
  }
  return t;
}

inline double window_energy(std::span<const double> window) {
  double e = 0.0;
  for (double w : window) e += w * w;
  return e;
}

/// Masking curve of one analysis-windowed frame.
inline MaskingCurve masking_curve(std::span<const double> windowed_frame,
                                  const NoiseConfig& config, double sample_rate) {
  validate(config, sample_rate);
  require(windowed_frame.size() == config.window.length, "frame length must equal L");
  const auto layout = make_band_layout(config.window.length, sample_rate, config.band_resolution_bark);
  RealFft fft(config.window.length);
  const auto p = band_powers(windowed_frame, window_energy(make_window(config.window)), layout, fft);
  return {layout.edges_hz, masking_thresholds(p, layout, config)};
}

/// Random-phase noise frame whose per-band mean-square power is
/// gamma^2 * threshold, spread evenly over the band's bins.
inline void synth_masked_noise(std::span<const double> threshold, double gamma,
                               const BandLayout& layout, Rng& rng, RealFft& fft,
                               std::span<double> out) {
  require(threshold.size() == layout.bands(), "band count mismatch");
  require(out.size() == layout.frame_length, "output length must equal L");
  const double L = static_cast<double>(layout.frame_length);
  std::vector<std::complex<double>> Z(fft.bins());
  for (std::size_t k = 0; k < Z.size(); ++k) {
    const std::size_t b = layout.band_of_bin[k];
    // Phase is drawn for every bin so the stream does not depend on the curve.
    const double phase = rng.next_uniform(0.0, 2.0 * std::numbers::pi);
    const double power = gamma * gamma * threshold[b];
    if (!(power > 0.0)) continue;
    const double mag = L * std::sqrt(power / layout.weight_sum[b]);
    if (layout.bin_weight[k] == 1.0)
      Z[k] = {std::cos(phase) >= 0.0 ? mag : -mag, 0.0};
    else
      Z[k] = std::polar(mag, phase);
  }
  fft.inverse(Z, out);
}

inline std::vector<double> synth_masked_noise(const MaskingCurve& curve, double gamma,
                                              Rng& rng, std::size_t frame_length,
                                              double sample_rate,
                                              double resolution_bark = 0.5) {
  const auto layout = make_band_layout(frame_length, sample_rate, resolution_bark);
  require(curve.band_edges_hz.size() == layout.edges_hz.size(),
          "curve does not match the frame layout");
  RealFft fft(frame_length);
  std::vector<double> out(frame_length);
  synth_masked_noise(curve.threshold, gamma, layout, rng, fft, out);
  return out;
}

/// Band-to-band power transfer of overlap-added noise as seen by the
/// windowed band-power estimator: at(b, s) is the power measured in band b
/// per unit power synthesized in band s. Neighbouring frames are assumed to
/// carry the same spectrum. Columns are stored over their non-zero band range.
struct LeakageModel {
  std::size_t bands = 0;
  std::vector<double> m;            // row-major [measured][source]
  std::vector<std::size_t> lo, hi;  // per source: measured bands [lo, hi)

  double at(std::size_t measured, std::size_t source) const { return m[measured * bands + source]; }
};

inline LeakageModel make_leakage_model(const BandLayout& layout, std::span<const double> window) {
  const std::size_t L = layout.frame_length;
  const std::size_t H = L / 2;
  require(window.size() == L, "window length must equal the frame length");
  RealFft fft(L);
  std::vector<std::complex<double>> G(fft.bins());
  std::vector<double> kernel(fft.bins(), 0.0), g(L);
  const double wss = window_energy(window);
  for (int shift : {0, 1, -1}) {
    for (std::size_t i = 0; i < L; ++i) {
      const auto j = static_cast<std::int64_t>(i) - shift * static_cast<std::int64_t>(H);
      const double other = (j >= 0 && j < static_cast<std::int64_t>(L)) ? window[static_cast<std::size_t>(j)] : 0.0;
      g[i] = window[i] * other;
    }
    fft.forward(g, G);
    for (std::size_t k = 0; k < G.size(); ++k) kernel[k] += std::norm(G[k]) / (static_cast<double>(L) * wss);
  }
  // Kernel is symmetric in the bin offset; keep the significant part.
  std::size_t support = 0;
  for (std::size_t k = 0; k < kernel.size(); ++k)
    if (kernel[k] > 1e-7 * kernel[0]) support = k;

  const std::size_t nb = layout.bands();
  LeakageModel model{nb, std::vector<double>(nb * nb, 0.0), std::vector<std::size_t>(nb, nb),
                     std::vector<std::size_t>(nb, 0)};
  const auto Li = static_cast<std::int64_t>(L);
  auto fold = [&](std::int64_t j) {
    j = ((j % Li) + Li) % Li;
    return static_cast<std::size_t>(std::min(j, Li - j));
  };
  for (std::int64_t k = 0; k < Li; ++k) {
    const std::size_t src = layout.band_of_bin[fold(k)];
    const double q = 1.0 / layout.weight_sum[src];
    for (std::int64_t d = -static_cast<std::int64_t>(support); d <= static_cast<std::int64_t>(support); ++d) {
      const std::size_t dst = layout.band_of_bin[fold(k + d)];
      model.m[dst * nb + src] += kernel[static_cast<std::size_t>(std::abs(d))] * q;
      model.lo[src] = std::min(model.lo[src], dst);
      model.hi[src] = std::max(model.hi[src], dst + 1);
    }
  }
  return model;
}

/// Band powers to synthesize so that the estimator measures at most, and
/// close to, `target` after leakage. Each source band is rescaled by a
/// soft minimum (power mean, exponent -4) of the target/measured ratios of
/// the bands it leaks into. Bands with zero target stay silent and are not
/// constrained.
inline std::vector<double> compensate_leakage(std::span<const double> target, const LeakageModel& model,
                                              int iterations = 24) {
  require(target.size() == model.bands, "band count mismatch");
  const std::size_t nb = model.bands;
  std::vector<double> x(target.begin(), target.end()), est(nb), inv(nb);
  for (int it = 0; it < iterations; ++it) {
    std::fill(est.begin(), est.end(), 0.0);
    for (std::size_t s = 0; s < nb; ++s) {
      if (!(x[s] > 0.0)) continue;
      for (std::size_t b = model.lo[s]; b < model.hi[s]; ++b) est[b] += model.at(b, s) * x[s];
    }
    for (std::size_t b = 0; b < nb; ++b) {
      const double r = (target[b] > 0.0 && est[b] > 0.0) ? est[b] / target[b] : 0.0;
      inv[b] = (r * r) * (r * r);  // power mean exponent -4
    }
    for (std::size_t s = 0; s < nb; ++s) {
      if (!(target[s] > 0.0)) continue;
      double num = 0.0, den = 0.0;
      for (std::size_t b = model.lo[s]; b < model.hi[s]; ++b) {
        if (!(target[b] > 0.0)) continue;
        num += model.at(b, s) * inv[b];
        den += model.at(b, s);
      }
      if (num > 0.0) x[s] *= std::clamp(1.0 / std::sqrt(std::sqrt(num / den)), 0.5, 2.0);
      x[s] = std::min(x[s], 4.0 * target[s]);
    }
  }
  return x;
}

/// Per-frame record of the noise injected into one channel.
struct NoiseFrameLog {
  std::int64_t frame = 0;
  std::vector<double> threshold;
};

/// Adds masked noise to one channel. The signal path is untouched; the
/// overlap-added noise is delayed by config.delay (default one hop). Band
/// levels are pre-compensated for window leakage.
inline std::vector<double> inject_noise_channel(std::span<const double> signal,
                                                const NoiseConfig& config, double sample_rate,
                                                std::uint64_t seed,
                                                std::vector<NoiseFrameLog>* log = nullptr) {
  validate(config, sample_rate);
  std::vector<double> out(signal.begin(), signal.end());
  if (config.gamma == 0.0) return out;

  const WolaLayout wola{config.window};
  const std::size_t L = wola.length();
  const auto H = static_cast<std::int64_t>(wola.hop());
  const auto D = static_cast<std::int64_t>(config.delay == 0 ? wola.hop() : config.delay);
  const auto len = static_cast<std::int64_t>(signal.size());
  const auto window = make_window(config.window);
  const double wenergy = window_energy(window);
  const auto layout = make_band_layout(L, sample_rate, config.band_resolution_bark);
  const auto leakage = make_leakage_model(layout, window);
  RealFft fft(L);
  Rng rng(seed);

  std::vector<double> frame(L), noise(L);
  for (std::int64_t k = WolaLayout::first_frame(); k <= wola.last_frame(signal.size()); ++k) {
    const std::int64_t start = k * H;
    if (start + D >= len) break;
    for (std::size_t i = 0; i < L; ++i) {
      const std::int64_t n = start + static_cast<std::int64_t>(i);
      frame[i] = (n >= 0 && n < len) ? window[i] * signal[static_cast<std::size_t>(n)] : 0.0;
    }
    const auto p = band_powers(frame, wenergy, layout, fft);
    auto thr = masking_thresholds(p, layout, config);
    synth_masked_noise(compensate_leakage(thr, leakage), config.gamma, layout, rng, fft, noise);
    for (std::size_t i = 0; i < L; ++i) {
      const std::int64_t n = start + D + static_cast<std::int64_t>(i);
      if (n >= 0 && n < len) out[static_cast<std::size_t>(n)] += window[i] * noise[i];
    }
    if (log) log->push_back({k, std::move(thr)});
  }
  return out;
}

/// Injects independent masked noise into every channel; channel c draws
/// from derive_seed(seed, c).
inline AudioBuffer inject_noise(const AudioBuffer& input, const NoiseConfig& config,
                                std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  out.reserve(input.channels());
  for (std::size_t c = 0; c < input.channels(); ++c)
    out.push_back(inject_noise_channel(input.channel(c), config, input.sample_rate(),
                                       derive_seed(seed, c)));
  return AudioBuffer(std::move(out), input.sample_rate());
}

}  // namespace decorr
