#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include <decorr/decorr.hpp>

#include "cli_util.hpp"
#include "json.hpp"

using namespace decorr;
using namespace cli_util;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {
const std::string kCli = DECORR_CLI_PATH;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "decorr_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result cli(const std::string& args, const std::string& err_file = "/dev/null") {
  return run(quote(kCli) + " " + args, err_file);
}
}  // namespace

TEST_CASE("process is reproducible", "[cli][process]") {
  const auto dir = scratch("process");
  write_wav(synth_signal(SignalKind::speechlike(), 2.0, 44100.0, 1), dir / "in.wav", WavFormat::Pcm16);
  const auto a = cli("process " + quote(dir / "in.wav") + " " + quote(dir / "a.wav") + " --preset P2 --seed 7");
  const auto b = cli("process " + quote(dir / "in.wav") + " " + quote(dir / "b.wav") + " --preset P2 --seed 7");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(dir / "a.wav") == slurp(dir / "b.wav"));

  const auto ja = nlohmann::json::parse(a.out), jb = nlohmann::json::parse(b.out);
  CHECK(ja["schema"] == "decorr.run_report/1");
  CHECK(ja["seed"] == 7);
  CHECK(ja["input"]["mono_duplicated"] == true);
  auto ja2 = ja;
  ja2.erase("timing");
  auto jb2 = jb;
  jb2.erase("timing");
  CHECK(ja2 == jb2);

  const auto out = read_wav(dir / "a.wav");
  CHECK(out.channels() == 2);
  CHECK(out.frames() == 2 * 44100);
}

TEST_CASE("process seeds from the environment", "[cli][process]") {
  const auto dir = scratch("env_seed");
  write_wav(synth_signal(SignalKind::pink(), 1.0, 44100.0, 2), dir / "in.wav", WavFormat::Float32);
  const auto a = run("DECORR_SEED=5 " + quote(kCli) + " process " + quote(dir / "in.wav") + " " +
                     quote(dir / "a.wav") + " --preset P1");
  const auto b = cli("process " + quote(dir / "in.wav") + " " + quote(dir / "b.wav") + " --preset P1 --seed 5");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(dir / "a.wav") == slurp(dir / "b.wav"));
}

TEST_CASE("process argument errors", "[cli][process]") {
  const auto dir = scratch("process_errors");
  write_wav(synth_signal(SignalKind::white(), 0.5, 44100.0, 3), dir / "in.wav", WavFormat::Pcm16);
  const auto err = dir / "err.txt";
  const auto bad = cli("process " + quote(dir / "in.wav") + " " + quote(dir / "o.wav") + " --preset P9", err.string());
  CHECK(bad.exit_code == 3);
  const auto msg = slurp(err);
  CHECK_THAT(msg, ContainsSubstring("P1") && ContainsSubstring("P6"));

  CHECK(cli("process " + quote(dir / "missing.wav") + " " + quote(dir / "o.wav") + " --preset P1").exit_code == 2);
  std::ofstream(dir / "junk.wav") << "not a wav file at all";
  CHECK(cli("process " + quote(dir / "junk.wav") + " " + quote(dir / "o.wav") + " --preset P1").exit_code == 2);
  CHECK(cli("process " + quote(dir / "in.wav") + " " + quote(dir / "o.wav")).exit_code == 3);
  CHECK(cli("process " + quote(dir / "in.wav") + " " + quote(dir / "o.wav") + " --params proposed:beta=1.5").exit_code == 3);
  CHECK(cli("process " + quote(dir / "in.wav") + " " + quote(dir / "o.wav") + " --params wobble:x=1").exit_code == 3);
  CHECK(cli("frobnicate").exit_code == 3);
}

TEST_CASE("process with custom parameters", "[cli][process]") {
  const auto dir = scratch("params");
  write_wav(synth_signal(SignalKind::white(), 1.0, 44100.0, 4), dir / "in.wav", WavFormat::Float32);
  const auto r = cli("process " + quote(dir / "in.wav") + " " + quote(dir / "o.wav") +
                     " --params smoothed_abs:alpha=0.3 --seed 1");
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["preset"] == "custom");
  CHECK(j["parameters"]["algorithm"] == "smoothed_abs");
  const auto out = read_wav(dir / "o.wav");
  CHECK(out.samples(0) != out.samples(1));
}

TEST_CASE("mono input yields decorrelated stereo", "[cli][process]") {
  const auto dir = scratch("mono");
  write_wav(synth_signal(SignalKind::pink(), 2.0, 44100.0, 5), dir / "in.wav", WavFormat::Float32);
  REQUIRE(cli("process " + quote(dir / "in.wav") + " " + quote(dir / "o.wav") + " --preset P4").exit_code == 0);
  const auto out = read_wav(dir / "o.wav");
  REQUIRE(out.channels() == 2);
  CHECK(out.samples(0) != out.samples(1));
}

TEST_CASE("measure", "[cli][measure]") {
  const auto dir = scratch("measure");
  write_wav(to_stereo(synth_signal(SignalKind::pink(), 3.0, 44100.0, 6)), dir / "same.wav", WavFormat::Float32);
  const auto l = synth_signal(SignalKind::white(), 10.0, 44100.0, 7);
  const auto r = synth_signal(SignalKind::white(), 10.0, 44100.0, 8);
  write_wav(AudioBuffer({l.samples(0), r.samples(0)}, 44100.0), dir / "indep.wav", WavFormat::Float32);
  write_wav(l, dir / "l.wav", WavFormat::Float32);
  write_wav(r, dir / "r.wav", WavFormat::Float32);

  const auto same = cli("measure " + quote(dir / "same.wav") + " --json");
  REQUIRE(same.exit_code == 0);
  const auto js = nlohmann::json::parse(same.out);
  CHECK(js["schema"] == "decorr.coherence_report/1");
  CHECK_THAT(js["bark_weighted_coherence"].get<double>(), WithinAbs(1.0, 1e-3));

  const auto indep = cli("measure " + quote(dir / "indep.wav"));
  REQUIRE(indep.exit_code == 0);
  CHECK(nlohmann::json::parse(indep.out)["bark_weighted_coherence"].get<double>() <= 0.05);

  const auto pair = cli("measure " + quote(dir / "l.wav") + " " + quote(dir / "r.wav"));
  REQUIRE(pair.exit_code == 0);
  CHECK(nlohmann::json::parse(pair.out)["bark_weighted_coherence"] ==
        nlohmann::json::parse(indep.out)["bark_weighted_coherence"]);

  const auto csv = cli("measure " + quote(dir / "same.wav") + " --csv");
  REQUIRE(csv.exit_code == 0);
  CHECK(csv.out.rfind("freq_hz,gamma_sq,snr_db\n", 0) == 0);
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 514);

  CHECK(cli("measure " + quote(dir / "l.wav")).exit_code == 2);
  CHECK(cli("measure " + quote(dir / "nope.wav")).exit_code == 2);
}

TEST_CASE("compare on an empty directory", "[cli][compare]") {
  const auto dir = scratch("compare_empty");
  const auto r = cli("compare " + quote(dir) + " --presets P1,P2");
  CHECK(r.exit_code == 0);
  CHECK(r.out == std::string(kCompareHeader) + "\n");
  CHECK(cli("compare " + quote(dir / "absent")).exit_code == 2);
  CHECK(cli("compare " + quote(dir) + " --presets P1,P7").exit_code == 3);
}

TEST_CASE("compare ranks presets on a synthetic corpus", "[cli][compare]") {
  const auto dir = scratch("compare");
  write_wav(synth_signal(SignalKind::white(), 4.0, 44100.0, 10), dir / "white.wav", WavFormat::Float32);
  write_wav(synth_signal(SignalKind::pink(), 4.0, 44100.0, 11), dir / "pink.wav", WavFormat::Float32);
  write_wav(synth_signal(SignalKind::speechlike(), 4.0, 44100.0, 12), dir / "speech.wav", WavFormat::Float32);
  write_wav(synth_signal(SignalKind::sweep(50.0, 16000.0), 4.0, 44100.0, 13), dir / "sweep.wav",
            WavFormat::Float32);
  std::ofstream(dir / "broken.wav") << "RIFF";

  const auto report = dir / "report.csv";
  const auto r = cli("compare " + quote(dir) + " --presets P1,P2,P3,P4,P5,P6 --seed 3 --out " + quote(report));
  REQUIRE(r.exit_code == 0);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["schema"] == "decorr.compare_summary/1");
  CHECK(summary["files"] == 5);
  std::map<std::string, double> mean;
  for (const auto& e : summary["ranking"]) mean[e["preset"]] = e["mean_bark_weighted_coherence"];
  INFO(summary.dump());
  CHECK(mean["P3"] < mean["P2"]);
  CHECK(mean["P2"] < mean["P1"]);
  CHECK(mean["P5"] <= mean["P4"]);

  const auto csv = slurp(report);
  CHECK(csv.rfind(std::string(kCompareHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5 * 6);
  CHECK_THAT(csv, ContainsSubstring("broken.wav,P1,") && ContainsSubstring("error: "));

  const auto again = cli("compare " + quote(dir) + " --presets P1,P2,P3,P4,P5,P6 --seed 3");
  REQUIRE(again.exit_code == 0);
  CHECK(again.out == csv);
}

TEST_CASE("aec-demo", "[cli][aec]") {
  const auto dir = scratch("aec");
  const auto a = cli("aec-demo --preset P2 --seed 1 --duration 5 --out " + quote(dir / "a.csv"));
  REQUIRE(a.exit_code == 0);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j["schema"] == "decorr.aec_demo/1");
  CHECK(j["improvement_db"].get<double>() >= 10.0);

  const auto b = cli("aec-demo --preset P2 --seed 1 --duration 5 --out " + quote(dir / "b.csv"));
  CHECK(a.out == b.out);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv").rfind("block,misalignment_db_baseline,misalignment_db_P2\n", 0) == 0);

  const auto none = cli("aec-demo --preset none --seed 1 --duration 5");
  REQUIRE(none.exit_code == 0);
  const auto jn = nlohmann::json::parse(none.out);
  CHECK(jn["final_misalignment_db_baseline"].get<double>() >= -10.0);
  CHECK_FALSE(jn.contains("improvement_db"));

  CHECK(cli("aec-demo --preset P0").exit_code == 3);
  CHECK(cli("aec-demo --duration -1").exit_code == 3);
  CHECK(cli("aec-demo --preset P2 --duration 1 --out /nonexistent/dir/t.csv").exit_code == 2);
}
