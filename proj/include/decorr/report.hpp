#pragma once

// JSON and CSV serialization of measurement and processing reports.
// Schemas live in docs/schemas/; CSV column order is fixed.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aec.hpp"
#include "decorrelators.hpp"
#include "metrics.hpp"

namespace decorr {

inline constexpr const char* kVersion = "1.0.0";

/// Shortest round-trip-stable text for CSV cells.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline nlohmann::json to_json(const std::vector<BandMean>& bands) {
  auto arr = nlohmann::json::array();
  for (const auto& b : bands)
    arr.push_back({{"band", b.band}, {"lo_hz", b.lo_hz}, {"hi_hz", b.hi_hz}, {"mean", b.mean}});
  return arr;
}

inline nlohmann::json to_json(const CoherenceReport& r) {
  return {
      {"schema", "decorr.coherence_report/1"},
      {"version", kVersion},
      {"sample_rate", r.sample_rate},
      {"n_segments", r.n_segments},
      {"degenerate", r.degenerate},
      {"bark_weighted_coherence", r.bark_weighted},
      {"band_gamma_sq", to_json(bark_band_means(r.gamma_sq, r.freq_hz))},
      {"bins", {{"freq_hz", r.freq_hz}, {"gamma_sq", r.gamma_sq}, {"snr_db", r.snr_db}}},
  };
}

inline void write_coherence_csv(std::ostream& os, const CoherenceReport& r) {
  os << "freq_hz,gamma_sq,snr_db\n";
  for (std::size_t k = 0; k < r.freq_hz.size(); ++k)
    os << format_number(r.freq_hz[k]) << ',' << format_number(r.gamma_sq[k]) << ','
       << format_number(r.snr_db[k]) << '\n';
}

inline nlohmann::json to_json(const PresetConfig& p) {
  nlohmann::json j{{"algorithm", to_string(p.algorithm)}};
  switch (p.algorithm) {
    case Algorithm::Proposed:
      j["beta"] = p.beta;
      j["gamma"] = p.gamma;
      break;
    case Algorithm::SmoothedAbs:
      j["alpha"] = p.alpha;
      break;
    case Algorithm::FirstOrderAllpass:
      j["alpha_min"] = p.alpha_min;
      break;
  }
  return j;
}

struct InputDescriptor {
  std::string path;
  std::size_t channels = 0;
  std::size_t frames = 0;
  double sample_rate = 0.0;
  bool mono_duplicated = false;
};

struct RunReport {
  InputDescriptor input;
  std::string preset;  // "P1".."P6" or "custom"
  PresetConfig config;
  std::uint64_t seed = 0;
  double bark_weighted = 0.0;
  std::vector<BandMean> band_gamma_sq;
  std::size_t clipped_samples = 0;
  double runtime_ms = 0.0;
};

/// Everything except "timing" is deterministic for equal inputs and seed.
inline nlohmann::json to_json(const RunReport& r) {
  return {
      {"schema", "decorr.run_report/1"},
      {"version", kVersion},
      {"input",
       {{"path", r.input.path},
        {"channels", r.input.channels},
        {"frames", r.input.frames},
        {"sample_rate", r.input.sample_rate},
        {"mono_duplicated", r.input.mono_duplicated}}},
      {"preset", r.preset},
      {"parameters", to_json(r.config)},
      {"seed", r.seed},
      {"bark_weighted_coherence", r.bark_weighted},
      {"band_gamma_sq", to_json(r.band_gamma_sq)},
      {"clipped_samples", r.clipped_samples},
      {"timing", {{"runtime_ms", r.runtime_ms}}},
  };
}

struct CompareRow {
  std::string file;
  std::string preset;
  std::string status = "ok";
  double bark_weighted = 0.0;
  double distortion_proxy_db = 0.0;
};

inline constexpr const char* kCompareHeader =
    "file,preset,status,bark_weighted_coherence,distortion_proxy_snr_db";

inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << kCompareHeader << '\n';
  for (const auto& r : rows) {
    os << csv_field(r.file) << ',' << r.preset << ',' << csv_field(r.status) << ',';
    if (r.status == "ok")
      os << format_number(r.bark_weighted) << ',' << format_number(r.distortion_proxy_db);
    else
      os << ',';
    os << '\n';
  }
}

inline void write_trace_csv(std::ostream& os, const AecDemoResult& r, const std::string& label) {
  os << "block,misalignment_db_baseline";
  if (r.processed) os << ",misalignment_db_" << label;
  os << '\n';
  for (std::size_t i = 0; i < r.baseline.misalignment_db.size(); ++i) {
    os << i << ',' << format_number(r.baseline.misalignment_db[i]);
    if (r.processed) os << ',' << format_number(r.processed->misalignment_db.at(i));
    os << '\n';
  }
}

}  // namespace decorr
