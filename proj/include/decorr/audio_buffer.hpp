#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace decorr {

/// Non-interleaved multichannel sample store. All channels share one length.
class AudioBuffer {
 public:
  AudioBuffer() = default;

  AudioBuffer(std::size_t channels, std::size_t frames, double sample_rate)
      : channels_(channels, std::vector<double>(frames, 0.0)),
        sample_rate_(sample_rate) {
    require(sample_rate > 0.0, "sample rate must be positive");
  }

  AudioBuffer(std::vector<std::vector<double>> channels, double sample_rate)
      : channels_(std::move(channels)), sample_rate_(sample_rate) {
    require(sample_rate > 0.0, "sample rate must be positive");
    for (const auto& ch : channels_)
      require(ch.size() == channels_.front().size(),
              "all channels must have equal length");
  }

  std::size_t channels() const noexcept { return channels_.size(); }
  std::size_t frames() const noexcept {
    return channels_.empty() ? 0 : channels_.front().size();
  }
  double sample_rate() const noexcept { return sample_rate_; }

  std::span<double> channel(std::size_t c) { return channels_.at(c); }
  std::span<const double> channel(std::size_t c) const {
    return channels_.at(c);
  }
  std::vector<double>& samples(std::size_t c) { return channels_.at(c); }
  const std::vector<double>& samples(std::size_t c) const {
    return channels_.at(c);
  }

  bool all_finite() const {
    for (const auto& ch : channels_)
      for (double v : ch)
        if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;

 private:
  std::vector<std::vector<double>> channels_;
  double sample_rate_ = 44100.0;
};

inline AudioBuffer mono(std::vector<double> samples, double sample_rate) {
  std::vector<std::vector<double>> chans;
  chans.push_back(std::move(samples));
  return AudioBuffer(std::move(chans), sample_rate);
}

/// Duplicates a mono buffer into both channels of a stereo buffer; stereo
/// input is returned unchanged.
inline AudioBuffer to_stereo(const AudioBuffer& in) {
  if (in.channels() == 2) return in;
  require(in.channels() == 1, "expected a mono or stereo buffer");
  return AudioBuffer({in.samples(0), in.samples(0)}, in.sample_rate());
}

/// Average of all channels.
inline AudioBuffer downmix(const AudioBuffer& in) {
  require(in.channels() >= 1, "empty buffer");
  if (in.channels() == 1) return in;
  std::vector<double> out(in.frames(), 0.0);
  for (std::size_t c = 0; c < in.channels(); ++c)
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += in.samples(c)[n];
  for (double& v : out) v /= static_cast<double>(in.channels());
  return mono(std::move(out), in.sample_rate());
}

inline AudioBuffer extract_channel(const AudioBuffer& in, std::size_t c) {
  return mono(in.samples(c), in.sample_rate());
}

}  // namespace decorr
