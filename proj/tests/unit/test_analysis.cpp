#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "hnsynth/analysis.hpp"
#include "hnsynth/errors.hpp"
#include "hnsynth/losses.hpp"
#include "hnsynth/signal_core.hpp"
#include "hnsynth/spectral.hpp"
#include "test_signals.hpp"

using namespace hnsynth;

namespace {

constexpr int kSr = 22050;

struct Setup {
  AnalysisConfig analysis = default_analysis_config(kSr);
  SpectralConfig spectral = default_spectral_config(kSr);
  MelConfig mel = default_mel_config(kSr);
};

Waveform tone(double f0, const std::vector<double>& amps, std::size_t n = kSr) {
  return {testsig::harmonic_tone(f0, amps, kSr, n), kSr};
}

// harmonic_synthesize output for a constant pitch and constant amplitudes.
Waveform synthesized(double f0, const std::vector<double>& amps, int hop, std::size_t frames) {
  HarmonicAmplitudes h(frames, amps.size());
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t k = 0; k < amps.size(); ++k) h.values(m, k) = amps[k];
  }
  return harmonic_synthesize(F0Contour::from_values(std::vector<double>(frames, f0), hop), h, kSr);
}

Waveform resynthesize(const AnalysisResult& a, const Setup& s, std::size_t len) {
  Waveform h = harmonic_synthesize(a.f0, a.harmonics, kSr);
  Waveform n = noise_synthesize(a.noise, s.spectral, 1, kSr);
  Waveform y = dsp_combine(h, n);
  y.samples.resize(len);
  return y;
}

double energy(const Matrix& m) {
  double e = 0.0;
  for (double v : m.data()) e += v * v;
  return e;
}

}  // namespace

// ------------------------------------------------------------ estimate_f0

TEST_CASE("estimate_f0: 220 Hz sine stays within 1 Hz") {
  Setup s;
  const F0Contour f0 = estimate_f0({testsig::sine(220.0, 0.5, kSr, kSr), kSr}, s.analysis);
  CHECK(f0.hop_size == static_cast<int>(s.analysis.hop_size));
  CHECK(f0.frames() == (kSr + s.analysis.hop_size - 1) / s.analysis.hop_size);
  std::size_t voiced = 0;
  for (std::size_t m = 0; m < f0.frames(); ++m) {
    if (!f0.voiced[m]) continue;
    ++voiced;
    CHECK(std::abs(f0.values[m] - 220.0) <= 1.0);
  }
  CHECK(voiced >= f0.frames() - 2);
}

TEST_CASE("estimate_f0: silence is unvoiced everywhere") {
  Setup s;
  const F0Contour f0 = estimate_f0({std::vector<double>(kSr, 0.0), kSr}, s.analysis);
  for (std::size_t m = 0; m < f0.frames(); ++m) {
    CHECK_FALSE(f0.voiced[m]);
    CHECK(f0.values[m] == 0.0);
  }
}

TEST_CASE("estimate_f0: 220 then 330 Hz gives two plateaus and a short transition") {
  Setup s;
  const std::size_t half = kSr / 2;
  auto x = testsig::sine(220.0, 0.5, kSr, half);
  // Continue the phase so the only change is the frequency.
  const double phase = testsig::kTwoPi * 220.0 * static_cast<double>(half) / kSr - testsig::kTwoPi * 330.0 * static_cast<double>(half) / kSr;
  for (std::size_t i = 0; i < half; ++i) {
    x.push_back(0.5 * std::sin(testsig::kTwoPi * 330.0 * static_cast<double>(half + i + 1) / kSr + phase));
  }
  const F0Contour f0 = estimate_f0({x, kSr}, s.analysis);
  std::size_t off_plateau = 0;
  for (std::size_t m = 0; m < f0.frames(); ++m) {
    const bool low = f0.voiced[m] && std::abs(f0.values[m] - 220.0) <= 2.0;
    const bool high = f0.voiced[m] && std::abs(f0.values[m] - 330.0) <= 2.0;
    if (!low && !high) ++off_plateau;
    const double centre = static_cast<double>(m * s.analysis.hop_size + s.analysis.hop_size / 2);
    if (centre + 2.0 * s.analysis.hop_size < static_cast<double>(half) && f0.voiced[m]) CHECK(low);
    if (centre > static_cast<double>(half) + 2.0 * s.analysis.hop_size && f0.voiced[m]) CHECK(high);
  }
  CHECK(off_plateau < 5);
}

TEST_CASE("estimate_f0: values stay in range or are zero") {
  Setup s;
  auto x = testsig::harmonic_tone(150.0, {0.3, 0.2, 0.1}, kSr, kSr);
  const auto noise = testsig::white_noise(kSr, 0.05, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i];
  const F0Contour f0 = estimate_f0({x, kSr}, s.analysis);
  for (std::size_t m = 0; m < f0.frames(); ++m) {
    if (f0.voiced[m]) {
      CHECK(f0.values[m] >= s.analysis.f0_min);
      CHECK(f0.values[m] <= s.analysis.f0_max);
    } else {
      CHECK(f0.values[m] == 0.0);
    }
  }
}

TEST_CASE("estimate_f0: small circular shifts move each frame by under 1 Hz") {
  Setup s;
  const auto x = testsig::harmonic_tone(247.0, {0.4, 0.2, 0.1}, kSr, kSr);
  const F0Contour ref = estimate_f0({x, kSr}, s.analysis);
  for (std::size_t shift : {1u, 7u, 31u}) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[(i + shift) % x.size()] = x[i];
    const F0Contour moved = estimate_f0({y, kSr}, s.analysis);
    REQUIRE(moved.frames() == ref.frames());
    // The wrap-around seam sits in the first and last frames; compare the sustained part.
    for (std::size_t m = 2; m + 2 < ref.frames(); ++m) {
      REQUIRE(ref.voiced[m]);
      REQUIRE(moved.voiced[m]);
      CHECK(std::abs(moved.values[m] - ref.values[m]) < 1.0);
    }
  }
}

TEST_CASE("estimate_f0: input shorter than two frames is rejected") {
  Setup s;
  const Waveform x{std::vector<double>(2 * s.analysis.hop_size - 1, 0.0), kSr};
  CHECK_THROWS_AS(estimate_f0(x, s.analysis), InvalidArgument);
}

TEST_CASE("AnalysisConfig: invalid ranges are rejected") {
  AnalysisConfig cfg = default_analysis_config(kSr);
  cfg.f0_min = 0.0;
  CHECK_THROWS_AS(cfg.validate(kSr), InvalidArgument);
  cfg = default_analysis_config(kSr);
  cfg.f0_max = cfg.f0_min;
  CHECK_THROWS_AS(cfg.validate(kSr), InvalidArgument);
  cfg = default_analysis_config(kSr);
  cfg.f0_max = kSr / 2.0;
  CHECK_THROWS_AS(cfg.validate(kSr), InvalidArgument);
  cfg = default_analysis_config(kSr);
  cfg.hop_size = 0;
  CHECK_THROWS_AS(cfg.validate(kSr), InvalidArgument);
  CHECK_NOTHROW(default_analysis_config(kSr).validate(kSr));
  CHECK(default_analysis_config(kSr).hop_size == default_spectral_config(kSr).hop_size);
  CHECK(default_analysis_config(44100).hop_size == default_spectral_config(44100).hop_size);
}

// ------------------------------------------------------------ load_f0 / save_f0

TEST_CASE("load_f0: all-zero file gives an unvoiced contour") {
  testsig::TempDir dir;
  {
    std::ofstream f(dir / "zeros.f0");
    f << "# hop=256 sr=22050\n0\n0\n0\n0\n";
  }
  int sr = 0;
  const F0Contour f0 = load_f0(dir / "zeros.f0", &sr);
  CHECK(sr == 22050);
  CHECK(f0.hop_size == 256);
  REQUIRE(f0.frames() == 4);
  for (std::size_t m = 0; m < 4; ++m) {
    CHECK(f0.values[m] == 0.0);
    CHECK_FALSE(f0.voiced[m]);
  }
}

TEST_CASE("load_f0: hand-written three-line file") {
  testsig::TempDir dir;
  {
    std::ofstream f(dir / "hand.f0");
    f << "# hop=256 sr=22050\n220\n220\n\n0\n";
  }
  const F0Contour f0 = load_f0(dir / "hand.f0");
  CHECK(f0.values == std::vector<double>{220.0, 220.0, 0.0});
  CHECK(f0.voiced == std::vector<bool>{true, true, false});
}

TEST_CASE("save_f0 then load_f0 is the identity") {
  testsig::TempDir dir;
  const F0Contour original =
      F0Contour::from_values({0.0, 110.0, 220.123456789012345, 1.0 / 3.0, 0.0, 987.654321}, 512);
  save_f0(original, 44100, dir / "rt.f0");
  int sr = 0;
  const F0Contour back = load_f0(dir / "rt.f0", &sr);
  CHECK(sr == 44100);
  CHECK(back == original);
}

TEST_CASE("load_f0: parse failures report the line number") {
  testsig::TempDir dir;
  auto expect_line = [&](const std::string& text, const std::string& where) {
    {
      std::ofstream f(dir / "bad.f0");
      f << text;
    }
    try {
      load_f0(dir / "bad.f0");
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(where) != std::string::npos);
      CHECK(e.exit_code() == ExitCode::Format);
    }
  };
  expect_line("# hop=256 sr=22050\n220\nabc\n", "line 3");
  expect_line("# hop=256 sr=22050\n220\n-5\n", "line 3");
  expect_line("hop=256\n220\n", "line 1");
  expect_line("# hop=256 sr=22050\n220 230\n", "line 2");
  CHECK_THROWS_AS(load_f0(dir / "missing.f0"), FileNotFound);
}

// ------------------------------------------------------------ estimate_harmonics

TEST_CASE("estimate_harmonics: single harmonic from harmonic_synthesize") {
  Setup s;
  const int hop = static_cast<int>(s.spectral.hop_size);
  const Waveform x = synthesized(220.0, {0.5}, hop, 86);
  const F0Contour f0 = F0Contour::from_values(std::vector<double>(86, 220.0), hop);
  const HarmonicAmplitudes h = estimate_harmonics(x, f0, s.analysis, s.spectral);
  REQUIRE(h.frames() == 86);
  REQUIRE(h.k_max() == s.analysis.k_max);
  for (std::size_t m = 0; m < h.frames(); ++m) {
    CHECK(std::abs(h.values(m, 0) - 0.5) / 0.5 < 0.05);
    for (std::size_t k = 1; k < h.k_max(); ++k) CHECK(h.values(m, k) < 0.02);
  }
}

TEST_CASE("estimate_harmonics: two harmonics within 5%") {
  Setup s;
  const int hop = static_cast<int>(s.spectral.hop_size);
  const Waveform x = synthesized(220.0, {0.5, 0.25}, hop, 86);
  const F0Contour f0 = F0Contour::from_values(std::vector<double>(86, 220.0), hop);
  const HarmonicAmplitudes h = estimate_harmonics(x, f0, s.analysis, s.spectral);
  for (std::size_t m = 0; m < h.frames(); ++m) {
    CHECK(std::abs(h.values(m, 0) - 0.5) / 0.5 < 0.05);
    CHECK(std::abs(h.values(m, 1) - 0.25) / 0.25 < 0.05);
  }
}

TEST_CASE("estimate_harmonics: silence with forced voicing reads near zero") {
  Setup s;
  const Waveform x{std::vector<double>(kSr, 0.0), kSr};
  const std::size_t frames = s.spectral.frames_for(x.size());
  const F0Contour f0 =
      F0Contour::from_values(std::vector<double>(frames, 200.0), static_cast<int>(s.spectral.hop_size));
  const HarmonicAmplitudes h = estimate_harmonics(x, f0, s.analysis, s.spectral);
  for (double v : h.values.data()) CHECK(v < 1e-3);
}

TEST_CASE("estimate_harmonics: zero on unvoiced frames and above Nyquist, never negative") {
  Setup s;
  const int hop = static_cast<int>(s.spectral.hop_size);
  const Waveform x = tone(900.0, {0.3, 0.2, 0.1});
  const std::size_t frames = s.spectral.frames_for(x.size());
  std::vector<double> values;
  for (std::size_t m = 0; m < frames; ++m) values.push_back(m >= 10 && m < 20 ? 0.0 : 900.0);
  const F0Contour f0 = F0Contour::from_values(values, hop);
  const HarmonicAmplitudes h = estimate_harmonics(x, f0, s.analysis, s.spectral);
  const auto above = static_cast<std::size_t>(std::ceil((kSr / 2.0) / 900.0));  // first k with k*f0 >= Nyquist
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t k = 0; k < h.k_max(); ++k) {
      CHECK(h.values(m, k) >= 0.0);
      if (!f0.voiced[m] || k + 1 >= above) CHECK(h.values(m, k) == 0.0);
    }
  }
}

TEST_CASE("estimate_harmonics: matches known amplitudes of a multi-harmonic tone") {
  Setup s;
  const std::vector<double> amps{0.4, 0.25, 0.15, 0.1};
  for (double hz : {110.0, 220.0, 440.0}) {
    CAPTURE(hz);
    const Waveform x = tone(hz, amps);
    const std::size_t frames = s.spectral.frames_for(x.size());
    const F0Contour f0 = F0Contour::from_values(std::vector<double>(frames, hz), static_cast<int>(s.spectral.hop_size));
    const HarmonicAmplitudes h = estimate_harmonics(x, f0, s.analysis, s.spectral);
    for (std::size_t m = 0; m < frames; ++m) {
      for (std::size_t k = 0; k < amps.size(); ++k) CHECK(std::abs(h.values(m, k) - amps[k]) / amps[k] < 0.01);
      for (std::size_t k = amps.size(); k < h.k_max(); ++k) CHECK(h.values(m, k) < 1e-3);
    }
  }
}

TEST_CASE("estimate_harmonics: refinement never raises the mel distance") {
  Setup s;
  auto x = testsig::harmonic_tone(180.0, {0.3, 0.3, 0.2, 0.1}, kSr, kSr);
  const auto noise = testsig::white_noise(kSr, 0.02, 5);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i];
  const Waveform w{x, kSr};
  const F0Contour f0 = estimate_f0(w, s.analysis);
  AnalysisConfig refined = s.analysis;
  refined.refine_iters = 3;
  const HarmonicAmplitudes plain = estimate_harmonics(w, f0, s.analysis, s.spectral);
  const HarmonicAmplitudes better = estimate_harmonics(w, f0, refined, s.spectral);
  MelConfig mel = s.mel;
  mel.spectral = s.spectral;
  auto loss = [&](const HarmonicAmplitudes& h) {
    Waveform y = harmonic_synthesize(f0, h, kSr);
    y.samples.resize(w.size());
    return mel_l1(y, w, mel);
  };
  CHECK(loss(better) <= loss(plain));
}

TEST_CASE("estimate_harmonics: hop mismatch is rejected") {
  Setup s;
  const Waveform x = tone(220.0, {0.5});
  const F0Contour f0 = F0Contour::from_values(std::vector<double>(10, 220.0), static_cast<int>(s.spectral.hop_size) * 2);
  CHECK_THROWS_AS(estimate_harmonics(x, f0, s.analysis, s.spectral), InvalidArgument);
  CHECK_THROWS_AS(phase_aligned_harmonics(x, f0, s.analysis, s.spectral), InvalidArgument);
}

TEST_CASE("estimate_harmonics: works with Hamming and rectangular windows") {
  Setup s;
  const std::vector<double> amps{0.4, 0.2};
  const Waveform x = tone(300.0, amps);
  for (WindowKind kind : {WindowKind::Hamming, WindowKind::Rectangular}) {
    SpectralConfig spectral = s.spectral;
    spectral.window = kind;
    const std::size_t frames = spectral.frames_for(x.size());
    const F0Contour f0 = F0Contour::from_values(std::vector<double>(frames, 300.0), static_cast<int>(spectral.hop_size));
    const HarmonicAmplitudes h = estimate_harmonics(x, f0, s.analysis, spectral);
    for (std::size_t m = 0; m < frames; ++m) {
      CHECK(std::abs(h.values(m, 0) - 0.4) / 0.4 < 0.05);
      CHECK(std::abs(h.values(m, 1) - 0.2) / 0.2 < 0.05);
    }
  }
}

// ------------------------------------------------------------ phase_aligned_harmonics

TEST_CASE("phase_aligned_harmonics: rebuilds a stationary tone sample by sample") {
  Setup s;
  const Waveform x = tone(220.0, {0.4, 0.25, 0.15, 0.1});
  const F0Contour f0 = estimate_f0(x, s.analysis);
  const Waveform h = phase_aligned_harmonics(x, f0, s.analysis, s.spectral);
  REQUIRE(h.size() == x.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(h.samples[i] - x.samples[i]));
  CHECK(worst < 1e-3);
}

// ------------------------------------------------------------ estimate_noise

TEST_CASE("estimate_noise: identical input leaves no residual") {
  Setup s;
  const Waveform x = tone(220.0, {0.5, 0.2});
  const NoiseMagnitudeSpectrum n = estimate_noise(x, x, s.spectral);
  CHECK(n.frames() == s.spectral.frames_for(x.size()));
  CHECK(n.bins() == s.spectral.bins());
  for (double v : n.values.data()) CHECK(v < 1e-6);
}

TEST_CASE("estimate_noise: zero harmonic part gives |STFT(x)| exactly") {
  Setup s;
  const Waveform x{testsig::uniform(10000, -0.5, 0.5, 9), kSr};
  const NoiseMagnitudeSpectrum n = estimate_noise(x, {std::vector<double>(x.size(), 0.0), kSr}, s.spectral);
  CHECK(n.values == magnitude(stft(x, s.spectral)));
}

TEST_CASE("estimate_noise: sine plus noise recovers the injected noise energy") {
  Setup s;
  const auto noise = testsig::white_noise(kSr, 0.02, 11);
  auto mix = testsig::sine(330.0, 0.5, kSr, kSr);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += noise[i];
  const Waveform x{mix, kSr};
  const F0Contour f0 = estimate_f0(x, s.analysis);
  // A sine has one partial; higher ones would only fit noise.
  AnalysisConfig one = s.analysis;
  one.k_max = 1;
  const Waveform recovered = phase_aligned_harmonics(x, f0, one, s.spectral);
  const NoiseMagnitudeSpectrum n = estimate_noise(x, recovered, s.spectral);
  const double injected = energy(magnitude(stft({noise, kSr}, s.spectral)));
  CHECK(std::abs(energy(n.values) - injected) / injected < 0.2);
}

TEST_CASE("estimate_noise: mismatched inputs are rejected") {
  Setup s;
  const Waveform x{std::vector<double>(4096, 0.0), kSr};
  CHECK_THROWS_AS(estimate_noise(x, {std::vector<double>(4095, 0.0), kSr}, s.spectral), InvalidArgument);
  CHECK_THROWS_AS(estimate_noise(x, {std::vector<double>(4096, 0.0), 44100}, s.spectral), InvalidArgument);
}

// ------------------------------------------------------------ analyze

TEST_CASE("analyze: harmonic tone round trip stays under 0.05 mel L1") {
  Setup s;
  for (double hz : {110.0, 220.0, 440.0, 660.0}) {
    CAPTURE(hz);
    const Waveform x = tone(hz, {0.4, 0.25, 0.15, 0.1});
    const AnalysisResult a = analyze(x, s.analysis, s.spectral);
    CHECK(mel_l1(resynthesize(a, s, x.size()), x, s.mel) < 0.05);
  }
}

TEST_CASE("analyze: round trip of harmonic_synthesize output with smooth amplitudes") {
  Setup s;
  const int hop = static_cast<int>(s.spectral.hop_size);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pitch(100.0, 800.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const double f0_hz = pitch(rng);
    const std::size_t frames = 80;
    const std::size_t k = 4;
    // Amplitudes drift slowly around their own level.
    std::vector<double> base(k), rate(k);
    for (std::size_t i = 0; i < k; ++i) {
      base[i] = 0.1 + 0.2 * unit(rng);
      rate[i] = 0.5 + unit(rng);
    }
    HarmonicAmplitudes truth(frames, k);
    for (std::size_t m = 0; m < frames; ++m) {
      const double t = static_cast<double>(m) / static_cast<double>(frames);
      for (std::size_t i = 0; i < k; ++i) truth.values(m, i) = base[i] * (1.0 + 0.3 * std::sin(testsig::kTwoPi * rate[i] * t));
    }
    const F0Contour contour = F0Contour::from_values(std::vector<double>(frames, f0_hz), hop);
    const Waveform x = harmonic_synthesize(contour, truth, kSr);
    CAPTURE(f0_hz);
    const AnalysisResult a = analyze(x, s.analysis, s.spectral);
    CHECK(mel_l1(resynthesize(a, s, x.size()), x, s.mel) < 0.1);
    for (std::size_t m = 2; m + 2 < frames; ++m) {
      for (std::size_t i = 0; i < k; ++i) {
        if (truth.values(m, i) < 0.05) continue;
        CHECK(std::abs(a.harmonics.values(m, i) - truth.values(m, i)) / truth.values(m, i) < 0.1);
      }
    }
  }
}

TEST_CASE("analyze: silence gives an unvoiced contour, zero H and near-zero N") {
  Setup s;
  const AnalysisResult a = analyze({std::vector<double>(kSr / 2, 0.0), kSr}, s.analysis, s.spectral);
  for (bool v : a.f0.voiced) CHECK_FALSE(v);
  for (double v : a.harmonics.values.data()) CHECK(v == 0.0);
  for (double v : a.noise.values.data()) CHECK(v < 1e-9);
}

TEST_CASE("analyze: f0 output is exactly estimate_f0") {
  Setup s;
  const Waveform x{testsig::sine(220.0, 0.5, kSr, kSr), kSr};
  CHECK(analyze(x, s.analysis, s.spectral).f0 == estimate_f0(x, s.analysis));
}

TEST_CASE("analyze: hop mismatch between configs is rejected") {
  Setup s;
  SpectralConfig spectral = s.spectral;
  spectral.hop_size *= 2;
  CHECK_THROWS_AS(analyze(tone(220.0, {0.5}), s.analysis, spectral), InvalidArgument);
}
