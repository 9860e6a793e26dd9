#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <decorr/decorrelators.hpp>
#include <decorr/metrics.hpp>
#include <decorr/signals.hpp>

#include "test_util.hpp"

using namespace decorr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

constexpr double kFs = 44100.0;

TEST_CASE("preset table", "[presets]") {
  const auto& p1 = preset(PresetId::P1);
  CHECK(p1.algorithm == Algorithm::Proposed);
  CHECK(p1.beta == 0.62);
  CHECK(p1.gamma == 0.6);
  const auto& p2 = preset(PresetId::P2);
  CHECK(p2.algorithm == Algorithm::Proposed);
  CHECK(p2.beta == 0.36);
  CHECK(p2.gamma == 1.0);
  const auto& p3 = preset(PresetId::P3);
  CHECK(p3.algorithm == Algorithm::Proposed);
  CHECK(p3.beta == 0.18);
  CHECK(p3.gamma == 1.67);
  CHECK(preset(PresetId::P4).algorithm == Algorithm::SmoothedAbs);
  CHECK(preset(PresetId::P4).alpha == 0.3);
  CHECK(preset(PresetId::P5).algorithm == Algorithm::SmoothedAbs);
  CHECK(preset(PresetId::P5).alpha == 0.6);
  CHECK(preset(PresetId::P6).algorithm == Algorithm::FirstOrderAllpass);
  CHECK(preset(PresetId::P6).alpha_min == -0.985);

  CHECK(parse_preset("P3") == PresetId::P3);
  CHECK_FALSE(parse_preset("P9").has_value());
  CHECK_FALSE(parse_preset("p1").has_value());
}

TEST_CASE("smoothed_abs maps silence to silence", "[smoothed_abs]") {
  const AudioBuffer silent(2, 1000, kFs);
  const auto y = smoothed_abs(silent, {.alpha = 0.3});
  for (std::size_t c = 0; c < 2; ++c)
    for (double v : y.samples(c)) CHECK(v == 0.0);
}

TEST_CASE("smoothed_abs direct substitution", "[smoothed_abs]") {
  // Zero-mean signal with sigma = 1: {+1, -1, 0, 0} has variance 0.5, so
  // scale to {sqrt2, -sqrt2, 0, 0}.
  const double s = std::sqrt(2.0);
  const AudioBuffer x({{s, -s, 0.0, 0.0}, {s, -s, 0.0, 0.0}}, kFs);
  const auto y = smoothed_abs(x, {.alpha = 0.3, .c_factor = 0.65});
  CHECK_THAT(y.samples(0)[2], WithinAbs(0.195, 1e-12));
  CHECK_THAT(y.samples(1)[2], WithinAbs(-0.195, 1e-12));
  CHECK_THAT(y.samples(0)[0], WithinAbs(s + 0.3 * std::sqrt(2.0 + 0.65 * 0.65), 1e-12));
}

TEST_CASE("smoothed_abs adds opposite terms to identical channels", "[smoothed_abs]") {
  const auto x = to_stereo(synth_signal(SignalKind::sine(440.0), 1.0, kFs, 0));
  const auto y = smoothed_abs(x, {.alpha = 0.3});
  CHECK(y.samples(0) != y.samples(1));
  for (std::size_t n = 0; n < x.frames(); ++n) {
    const double dl = y.samples(0)[n] - x.samples(0)[n];
    const double dr = y.samples(1)[n] - x.samples(1)[n];
    REQUIRE_THAT(dl, WithinAbs(-dr, 1e-15));
  }
  CHECK(stereo_coherence(y).bark_weighted < 1.0);
}

TEST_CASE("smoothed_abs streaming sigma", "[smoothed_abs]") {
  const auto x = to_stereo(synth_signal(SignalKind::white(), 3.0, kFs, 1));
  const auto offline = smoothed_abs(x, {.alpha = 0.3});
  const auto streaming = smoothed_abs(x, {.alpha = 0.3, .streaming_window_s = 1.0});
  // After the first second the running RMS approximates the global sigma.
  double worst = 0.0;
  for (std::size_t n = 44100; n < x.frames(); ++n)
    worst = std::max(worst, std::abs(streaming.samples(0)[n] - offline.samples(0)[n]));
  CHECK(worst < 0.01);
  CHECK(streaming.all_finite());
}

TEST_CASE("first-order allpass with a frozen coefficient", "[allpass1]") {
  std::vector<double> imp(1u << 16, 0.0);
  imp[0] = 1.0;
  const auto h = first_order_allpass_channel(imp, {.alpha_min = -0.985, .walk_step = 0.0}, 1);
  const double e = std::inner_product(h.begin(), h.end(), h.begin(), 0.0);
  CHECK_THAT(e, WithinAbs(1.0, 1e-6));
  const auto mag = test_util::fft_magnitude(h, h.size());
  double worst = 0.0;
  for (double m : mag) worst = std::max(worst, std::abs(m - 1.0));
  CHECK(worst <= 1e-6);

  const auto x = synth_signal(SignalKind::white(), 1.0, kFs, 3);
  const auto y = first_order_allpass_channel(x.channel(0), {.walk_step = 0.0}, 1);
  const double ex = test_util::mean_square(x.channel(0));
  const double ey = test_util::mean_square(y);
  CHECK_THAT(ey, WithinRel(ex, 1e-3));
}

TEST_CASE("first-order allpass with a walking coefficient adds broadband noise", "[allpass1]") {
  const auto x = synth_signal(SignalKind::sine(3000.0), 2.0, kFs, 0);
  const auto moving = first_order_allpass_channel(x.channel(0), {}, 4);
  // Reference: the same allpass frozen at the walk's starting coefficient
  // still differs only by phase at 3 kHz; the walk spreads energy elsewhere.
  const auto psd = welch_psd(moving, kFs);
  const auto ref_psd = welch_psd(x.channel(0), kFs);
  const std::size_t bin_10k = static_cast<std::size_t>(10000.0 / kFs * 1024.0);
  CHECK(psd[bin_10k] > 1e3 * ref_psd[bin_10k]);

  const auto st = first_order_allpass(to_stereo(x), {}, 4);
  CHECK(stereo_coherence(st).bark_weighted < 1.0);
}

TEST_CASE("first-order allpass is deterministic and alpha-bounded", "[allpass1]") {
  const auto x = to_stereo(synth_signal(SignalKind::pink(), 1.0, kFs, 5));
  CHECK(first_order_allpass(x, {}, 9) == first_order_allpass(x, {}, 9));
  CHECK_THROWS_AS(first_order_allpass(x, {.alpha_min = -1.0}, 9), Error);
  CHECK_THROWS_AS(first_order_allpass(x, {.alpha_min = 0.1}, 9), Error);
}

TEST_CASE("presets preserve length and stay finite", "[presets]") {
  const auto x = to_stereo(synth_signal(SignalKind::speechlike(), 2.0, kFs, 6));
  for (const auto& p : kPresets) {
    const auto y = apply_preset(x, p, 1);
    INFO(to_string(p.id));
    CHECK(y.frames() == x.frames());
    CHECK(y.channels() == 2);
    CHECK(y.all_finite());
  }
}

TEST_CASE("preset coherence ordering on pink noise", "[presets]") {
  const auto x = to_stereo(synth_signal(SignalKind::pink(), 10.0, kFs, 1));
  auto coh = [&](PresetId id) { return stereo_coherence(apply_preset(x, id, 1)).bark_weighted; };
  const double p1 = coh(PresetId::P1), p3 = coh(PresetId::P3), p6 = coh(PresetId::P6);
  INFO("P1 " << p1 << " P3 " << p3 << " P6 " << p6);
  CHECK(p3 < p1);
  CHECK(p6 < 1.0);
  CHECK(p6 > p3);
}

TEST_CASE("smoothed_abs decorrelates white noise", "[presets]") {
  const auto x = to_stereo(synth_signal(SignalKind::white(), 10.0, kFs, 2));
  CHECK(stereo_coherence(apply_preset(x, PresetId::P4, 1)).bark_weighted < 1.0);
}
