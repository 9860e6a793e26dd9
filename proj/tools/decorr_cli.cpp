// decorr: stereo decorrelation driver.
//
//   decorr process IN.wav OUT.wav (--preset P1..P6 | --params SPEC) [--seed S]
//   decorr measure A.wav [B.wav] [--json | --csv]
//   decorr compare DIR [--presets P1,P2,...] [--seed S] [--out report.csv]
//   decorr aec-demo [--preset P2|none] [--seed S] [--out trace.csv]
//
// Exit codes: 0 success, 2 IO/format, 3 argument, 4 numeric divergence.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include <decorr/decorr.hpp>

namespace fs = std::filesystem;
using namespace decorr;

namespace {

constexpr int kExitIo = 2;
constexpr int kExitArgs = 3;
constexpr int kExitNumeric = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string valid_presets() {
  std::string s;
  for (const auto& p : kPresets) s += (s.empty() ? "" : ", ") + to_string(p.id);
  return s;
}

PresetConfig parse_preset_or_throw(const std::string& name) {
  if (auto id = parse_preset(name)) return preset(*id);
  throw UsageError("unknown preset '" + name + "'; valid presets: " + valid_presets());
}

/// "proposed:beta=0.36,gamma=1.0", "smoothed_abs:alpha=0.3",
/// "first_order_allpass:alpha_min=-0.985"
PresetConfig parse_params(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string algo = spec.substr(0, colon);
  std::map<std::string, double> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("malformed --params entry '" + item + "'");
      try {
        kv[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw UsageError("non-numeric value in --params entry '" + item + "'");
      }
    }
  }
  auto take = [&](const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const double v = it->second;
    kv.erase(it);
    return v;
  };
  PresetConfig p;
  if (algo == "proposed") {
    p.algorithm = Algorithm::Proposed;
    p.beta = take("beta", 0.36);
    p.gamma = take("gamma", 1.0);
    if (!(p.beta >= 0.0 && p.beta < 1.0)) throw UsageError("beta must lie in [0, 1)");
    if (!(p.gamma >= 0.0)) throw UsageError("gamma must be >= 0");
  } else if (algo == "smoothed_abs") {
    p.algorithm = Algorithm::SmoothedAbs;
    p.alpha = take("alpha", 0.3);
    if (!(p.alpha >= 0.0)) throw UsageError("alpha must be >= 0");
  } else if (algo == "first_order_allpass") {
    p.algorithm = Algorithm::FirstOrderAllpass;
    p.alpha_min = take("alpha_min", -0.985);
    if (!(p.alpha_min > -1.0 && p.alpha_min < 0.0)) throw UsageError("alpha_min must lie in (-1, 0)");
  } else {
    throw UsageError("unknown algorithm '" + algo +
                     "'; expected proposed, smoothed_abs or first_order_allpass");
  }
  if (!kv.empty()) throw UsageError("unknown parameter '" + kv.begin()->first + "' for " + algo);
  return p;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("DECORR_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("DECORR_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

WavFormat parse_format(const std::string& s) {
  if (s == "float32") return WavFormat::Float32;
  if (s == "pcm16") return WavFormat::Pcm16;
  if (s == "pcm24") return WavFormat::Pcm24;
  throw UsageError("unknown output format '" + s + "'; expected float32, pcm16 or pcm24");
}

int cmd_process(const std::string& in_path, const std::string& out_path,
                const std::string& preset_name, const std::string& params,
                const std::optional<std::uint64_t>& seed_flag, const std::string& format) {
  if (preset_name.empty() == params.empty())
    throw UsageError("exactly one of --preset or --params is required");
  RunReport rep;
  rep.config = params.empty() ? parse_preset_or_throw(preset_name) : parse_params(params);
  rep.preset = params.empty() ? preset_name : "custom";
  rep.seed = resolve_seed(seed_flag);
  const auto fmt = parse_format(format);

  const auto input = read_wav(in_path);
  rep.input = {in_path, input.channels(), input.frames(), input.sample_rate(), input.channels() == 1};
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = apply_preset(to_stereo(input), rep.config, rep.seed);
  rep.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  rep.clipped_samples = write_wav(out, out_path, fmt).clipped;
  if (rep.clipped_samples > 0)
    std::cerr << "warning: " << rep.clipped_samples << " samples clipped on output\n";
  if (welch_segment_count(out.frames(), {}) >= 4) {
    const auto coh = stereo_coherence(out);
    rep.bark_weighted = coh.bark_weighted;
    rep.band_gamma_sq = bark_band_means(coh.gamma_sq, coh.freq_hz);
  } else {
    std::cerr << "warning: input too short for coherence measurement\n";
  }
  std::cout << to_json(rep).dump(2) << '\n';
  return 0;
}

int cmd_measure(const std::vector<std::string>& files, bool csv) {
  CoherenceReport rep;
  if (files.size() == 1) {
    const auto st = read_wav(files[0]);
    if (st.channels() != 2) fail(ErrorKind::Format, "single-file measure needs a stereo file");
    if (welch_segment_count(st.frames(), {}) < 4) fail(ErrorKind::Format, "file too short to measure");
    rep = stereo_coherence(st);
  } else if (files.size() == 2) {
    const auto a = downmix(read_wav(files[0]));
    const auto b = downmix(read_wav(files[1]));
    if (a.sample_rate() != b.sample_rate()) fail(ErrorKind::Format, "sample rates differ");
    if (a.frames() != b.frames()) fail(ErrorKind::Format, "file lengths differ");
    if (welch_segment_count(a.frames(), {}) < 4) fail(ErrorKind::Format, "files too short to measure");
    rep = coherence(a, b);
  } else {
    throw UsageError("measure takes one stereo file or two files");
  }
  if (csv)
    write_coherence_csv(std::cout, rep);
  else
    std::cout << to_json(rep).dump(2) << '\n';
  return 0;
}

std::vector<PresetConfig> parse_preset_list(const std::string& list) {
  std::vector<PresetConfig> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_preset_or_throw(item));
  if (out.empty()) throw UsageError("--presets is empty");
  return out;
}

int cmd_compare(const std::string& dir, const std::string& preset_list,
                const std::optional<std::uint64_t>& seed_flag, const std::string& out_path) {
  const auto presets = parse_preset_list(preset_list);
  const auto seed = resolve_seed(seed_flag);
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (e.is_regular_file() && ext == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<CompareRow> rows;
  std::map<std::string, std::pair<double, int>> totals;
  for (const auto& f : files) {
    const auto name = f.filename().string();
    AudioBuffer mono_in;
    try {
      mono_in = downmix(read_wav(f));
      if (welch_segment_count(mono_in.frames(), {}) < 4)
        fail(ErrorKind::Format, "too short to measure");
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << name << ": " << e.what() << '\n';
      for (const auto& p : presets) rows.push_back({name, to_string(p.id), std::string("error: ") + e.what()});
      continue;
    }
    const auto stereo = to_stereo(mono_in);
    const auto file_seed = derive_seed(seed, fnv1a64(name));
    for (const auto& p : presets) {
      const auto out = apply_preset(stereo, p, file_seed);
      CompareRow row{name, to_string(p.id)};
      row.bark_weighted = stereo_coherence(out).bark_weighted;
      row.distortion_proxy_db =
          bark_band_snr_db(mono_in.channel(0), out.channel(0), out.sample_rate());
      auto& t = totals[row.preset];
      t.first += row.bark_weighted;
      t.second += 1;
      rows.push_back(row);
    }
  }

  if (out_path.empty()) {
    write_compare_csv(std::cout, rows);
  } else {
    std::ofstream os(out_path);
    if (!os) fail(ErrorKind::Io, "cannot open " + out_path + " for writing");
    write_compare_csv(os, rows);
  }

  std::vector<std::pair<std::string, double>> ranking;
  for (const auto& [name, t] : totals) ranking.emplace_back(name, t.first / t.second);
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  nlohmann::json summary{{"schema", "decorr.compare_summary/1"},
                         {"version", kVersion},
                         {"seed", seed},
                         {"files", files.size()},
                         {"note", "distortion_proxy_snr_db is a Bark-band equivalent SNR, not a perceptual grade"},
                         {"ranking", nlohmann::json::array()}};
  for (const auto& [name, mean] : ranking)
    summary["ranking"].push_back({{"preset", name}, {"mean_bark_weighted_coherence", mean}});
  (out_path.empty() ? std::cerr : std::cout) << summary.dump(2) << '\n';
  return 0;
}

int cmd_aec_demo(const std::string& preset_name, const std::optional<std::uint64_t>& seed_flag,
                 const std::string& out_path, double duration) {
  std::optional<PresetId> id;
  if (preset_name != "none") {
    id = parse_preset(preset_name);
    if (!id) throw UsageError("unknown preset '" + preset_name + "'; valid presets: " + valid_presets() + ", none");
  }
  if (!(duration > 0.0)) throw UsageError("--duration must be positive");
  const auto seed = resolve_seed(seed_flag);
  AecScenario sc;
  sc.duration_s = duration;
  const auto r = aec_demo(id, seed, sc);

  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) fail(ErrorKind::Io, "cannot open " + out_path + " for writing");
    write_trace_csv(os, r, preset_name);
  }
  nlohmann::json j{{"schema", "decorr.aec_demo/1"},
                   {"version", kVersion},
                   {"seed", seed},
                   {"preset", preset_name},
                   {"final_misalignment_db_baseline", r.baseline.final_db()}};
  if (r.processed) {
    j["final_misalignment_db_processed"] = r.processed->final_db();
    j["improvement_db"] = *r.improvement_db();
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo channel decorrelation toolkit"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string in_path, out_path, preset_name, params, format = "float32";
  auto* process = app.add_subcommand("process", "Decorrelate a WAV file (mono input is duplicated)");
  process->add_option("input", in_path, "Input WAV")->required();
  process->add_option("output", out_path, "Output WAV")->required();
  process->add_option("--preset", preset_name, "P1..P6");
  process->add_option("--params", params,
                      "Custom algorithm, e.g. proposed:beta=0.36,gamma=1.0");
  process->add_option("--seed", seed, "Random seed (default: $DECORR_SEED or 0)");
  process->add_option("--format", format, "float32, pcm16 or pcm24");

  std::vector<std::string> measure_files;
  bool as_json = false, as_csv = false;
  auto* measure = app.add_subcommand("measure", "Coherence of a stereo file or of two files");
  measure->add_option("files", measure_files, "stereo.wav | a.wav b.wav")->required()->expected(1, 2);
  auto* json_flag = measure->add_flag("--json", as_json, "JSON report (default)");
  measure->add_flag("--csv", as_csv, "Per-bin CSV")->excludes(json_flag);

  std::string corpus, preset_list = "P1,P2,P3,P4,P5,P6", report_path;
  auto* compare = app.add_subcommand("compare", "Process and measure every WAV in a directory");
  compare->add_option("dir", corpus, "Corpus directory")->required();
  compare->add_option("--presets", preset_list, "Comma-separated preset list");
  compare->add_option("--seed", seed, "Random seed (default: $DECORR_SEED or 0)");
  compare->add_option("--out", report_path, "CSV report path (default: stdout)");

  std::string aec_preset = "P2", trace_path;
  double duration = 10.0;
  auto* aec = app.add_subcommand("aec-demo", "Stereo NLMS echo-path identification demo");
  aec->add_option("--preset", aec_preset, "P1..P6 or none");
  aec->add_option("--seed", seed, "Random seed (default: $DECORR_SEED or 0)");
  aec->add_option("--out", trace_path, "Misalignment trace CSV");
  aec->add_option("--duration", duration, "Far-end duration in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitArgs;
  }

  try {
    if (*process) return cmd_process(in_path, out_path, preset_name, params, seed, format);
    if (*measure) return cmd_measure(measure_files, as_csv);
    if (*compare) return cmd_compare(corpus, preset_list, seed, report_path);
    if (*aec) return cmd_aec_demo(aec_preset, seed, trace_path, duration);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitArgs;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Io:
      case ErrorKind::Format: return kExitIo;
      case ErrorKind::InvalidArgument: return kExitArgs;
      case ErrorKind::Numeric: return kExitNumeric;
    }
  }
  return 0;
}
