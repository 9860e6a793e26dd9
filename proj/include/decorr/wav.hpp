#pragma once

// RIFF/WAVE reading and writing: PCM 16/24-bit and IEEE float 32-bit,
// mono or stereo, little-endian. Integer samples map to [-1, 1) by
// 2^(bits-1) in both directions.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "audio_buffer.hpp"
#include "error.hpp"

namespace decorr {

enum class WavFormat { Pcm16, Pcm24, Float32 };

struct WavWriteStats {
  std::size_t clipped = 0;  // samples outside [-1, 1] that were hard-clipped
};

namespace detail {

inline std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_tag(std::vector<std::uint8_t>& b, const char* tag) {
  b.insert(b.end(), tag, tag + 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

/// Parses a WAV image held in memory.
inline AudioBuffer parse_wav(const std::vector<std::uint8_t>& bytes) {
  using namespace detail;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail(ErrorKind::Format, "corrupt header: missing RIFF/WAVE signature");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size())
        fail(ErrorKind::Format, "corrupt header: truncated fmt chunk");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      block_align = read_u16(chunk + 20);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) fail(ErrorKind::Format, "corrupt header: truncated extensible fmt chunk");
        format = read_u16(chunk + 32);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) fail(ErrorKind::Format, "corrupt header: data chunk before fmt chunk");
      if (body + size > bytes.size()) fail(ErrorKind::Format, "corrupt header: data chunk truncated");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    // fact and any other chunks are skipped
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) fail(ErrorKind::Format, "corrupt header: missing fmt chunk");
  if (data == nullptr) fail(ErrorKind::Format, "corrupt header: missing data chunk");
  if (channels < 1 || channels > 2)
    fail(ErrorKind::Format, "unsupported fmt.channels: " + std::to_string(channels));
  if (rate == 0) fail(ErrorKind::Format, "unsupported fmt.sample_rate: 0");
  const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24);
  const bool flt = format == kFormatFloat && bits == 32;
  if (!pcm && !flt)
    fail(ErrorKind::Format, "unsupported fmt.format/bits_per_sample: " + std::to_string(format) +
                                "/" + std::to_string(bits));
  const std::size_t bytes_per_sample = bits / 8;
  if (block_align != channels * bytes_per_sample)
    fail(ErrorKind::Format, "corrupt header: fmt.block_align inconsistent");

  const std::size_t frames = data_size / block_align;
  AudioBuffer out(channels, frames, static_cast<double>(rate));
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* s = data + n * block_align + c * bytes_per_sample;
      double v = 0.0;
      if (flt) {
        v = static_cast<double>(std::bit_cast<float>(read_u32(s)));
      } else if (bits == 16) {
        v = static_cast<double>(static_cast<std::int16_t>(read_u16(s))) / 32768.0;
      } else {
        std::int32_t i = static_cast<std::int32_t>(s[0] | (s[1] << 8) | (s[2] << 16));
        if (i & 0x800000) i -= 0x1000000;
        v = static_cast<double>(i) / 8388608.0;
      }
      out.samples(c)[n] = v;
    }
  }
  return out;
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::Io, "read error on " + path.string());
  return parse_wav(bytes);
}

/// Serializes to a canonical 44-byte-header WAV image.
inline std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, WavFormat format,
                                            WavWriteStats* stats = nullptr) {
  using namespace detail;
  require(buffer.channels() >= 1 && buffer.channels() <= 2, "WAV output supports 1 or 2 channels");
  require(buffer.all_finite(), "cannot write non-finite samples");
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : format == WavFormat::Pcm24 ? 24 : 32;
  const auto channels = static_cast<std::uint16_t>(buffer.channels());
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
  const auto rate = static_cast<std::uint32_t>(std::lround(buffer.sample_rate()));
  const std::uint64_t data_size = static_cast<std::uint64_t>(buffer.frames()) * block_align;
  require(data_size + 36 <= UINT32_MAX, "WAV payload exceeds 4 GiB");

  std::vector<std::uint8_t> b;
  b.reserve(44 + data_size);
  put_tag(b, "RIFF");
  put_u32(b, static_cast<std::uint32_t>(36 + data_size));
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, format == WavFormat::Float32 ? kFormatFloat : kFormatPcm);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * block_align);
  put_u16(b, block_align);
  put_u16(b, bits);
  put_tag(b, "data");
  put_u32(b, static_cast<std::uint32_t>(data_size));

  std::size_t clipped = 0;
  for (std::size_t n = 0; n < buffer.frames(); ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      double v = buffer.samples(c)[n];
      if (v > 1.0 || v < -1.0) {
        ++clipped;
        v = std::clamp(v, -1.0, 1.0);
      }
      switch (format) {
        case WavFormat::Float32:
          put_u32(b, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
          break;
        case WavFormat::Pcm16: {
          const auto i = static_cast<std::int32_t>(std::clamp(std::nearbyint(v * 32768.0), -32768.0, 32767.0));
          put_u16(b, static_cast<std::uint16_t>(i));
          break;
        }
        case WavFormat::Pcm24: {
          const auto i = static_cast<std::int32_t>(
              std::clamp(std::nearbyint(v * 8388608.0), -8388608.0, 8388607.0));
          const auto u = static_cast<std::uint32_t>(i);
          b.push_back(static_cast<std::uint8_t>(u));
          b.push_back(static_cast<std::uint8_t>(u >> 8));
          b.push_back(static_cast<std::uint8_t>(u >> 16));
          break;
        }
      }
    }
  }
  if (stats) stats->clipped = clipped;
  return b;
}

inline WavWriteStats write_wav(const AudioBuffer& buffer, const std::filesystem::path& path,
                               WavFormat format = WavFormat::Float32) {
  WavWriteStats stats;
  const auto bytes = encode_wav(buffer, format, &stats);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write error on " + path.string());
  return stats;
}

}  // namespace decorr
