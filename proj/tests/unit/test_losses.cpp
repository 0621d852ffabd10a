#include <doctest.h>

#include <cmath>
#include <random>

#include "hnsynth/errors.hpp"
#include "hnsynth/losses.hpp"
#include "hnsynth/spectral.hpp"
#include "test_signals.hpp"

using namespace hnsynth;

namespace {

constexpr int kSr = 22050;

// Elementwise oracles, written out longhand.

double brute_mean_abs(const Matrix& a, const Matrix& b) {
  double sum = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) sum += std::fabs(a(r, c) - b(r, c));
  }
  return sum / static_cast<double>(a.rows() * a.cols());
}

double brute_rms(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> dist(-12.0, 3.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

std::vector<double> random_durations(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(0.0, 40.0);
  std::vector<double> v(n);
  for (double& d : v) d = std::round(dist(rng));
  return v;
}

MelConfig small_mel() {
  MelConfig mel = default_mel_config(kSr);
  mel.n_mels = 40;
  return mel;
}

}  // namespace

// ------------------------------------------------------------ dsp_loss / mel_l1

TEST_CASE("dsp_loss: identical waveforms give 0") {
  const Waveform y{testsig::uniform(8000, -0.5, 0.5, 1), kSr};
  CHECK(dsp_loss(y, y, small_mel(), LossWeights{}) == 0.0);
  CHECK(mel_l1(y, y, small_mel()) == 0.0);
}

TEST_CASE("dsp_loss: zero weight gives 0 for any pair") {
  LossWeights w;
  w.lambda_dsp = 0.0;
  const Waveform a{testsig::uniform(6000, -0.5, 0.5, 2), kSr};
  const Waveform b{testsig::uniform(6000, -0.5, 0.5, 3), kSr};
  CHECK(dsp_loss(a, b, small_mel(), w) == 0.0);
}

TEST_CASE("dsp_loss: matches the elementwise oracle on random pairs") {
  const MelConfig mel = small_mel();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lambda(0.0, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2000 + 500 * static_cast<std::size_t>(trial);
    const Waveform a{testsig::uniform(n, -0.8, 0.8, rng()), kSr};
    const Waveform b{testsig::uniform(n, -0.8, 0.8, rng()), kSr};
    LossWeights w;
    w.lambda_dsp = lambda(rng);
    const double oracle = w.lambda_dsp * brute_mean_abs(mel_spectrogram(a, mel), mel_spectrogram(b, mel));
    CHECK(dsp_loss(a, b, mel, w) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("dsp_loss: symmetric, non-negative and linear in lambda") {
  const MelConfig mel = small_mel();
  const Waveform a{testsig::uniform(5000, -0.5, 0.5, 4), kSr};
  const Waveform b{testsig::sine(440.0, 0.3, kSr, 5000), kSr};
  LossWeights w;
  CHECK(dsp_loss(a, b, mel, w) == dsp_loss(b, a, mel, w));
  CHECK(dsp_loss(a, b, mel, w) > 0.0);
  LossWeights twice = w;
  twice.lambda_dsp *= 2.0;
  CHECK(dsp_loss(a, b, mel, twice) == doctest::Approx(2.0 * dsp_loss(a, b, mel, w)).epsilon(1e-15));
}

TEST_CASE("dsp_loss: mismatched inputs and bad weights are rejected") {
  const MelConfig mel = small_mel();
  const Waveform a{std::vector<double>(4000, 0.0), kSr};
  CHECK_THROWS_AS(dsp_loss(a, {std::vector<double>(3999, 0.0), kSr}, mel, LossWeights{}), InvalidArgument);
  CHECK_THROWS_AS(mel_l1(a, {std::vector<double>(4000, 0.0), 44100}, mel), InvalidArgument);
  LossWeights w;
  w.lambda_dsp = -1.0;
  CHECK_THROWS_AS(dsp_loss(a, a, mel, w), InvalidArgument);
  w.lambda_dsp = NAN;
  CHECK_THROWS_AS(w.validate(), InvalidArgument);
}

TEST_CASE("mean_abs_difference: shape mismatch is rejected") {
  CHECK_THROWS_AS(mean_abs_difference(Matrix(2, 3), Matrix(3, 2)), InvalidArgument);
  CHECK(mean_abs_difference(Matrix(), Matrix()) == 0.0);
}

// ------------------------------------------------------------ aux_feature_loss

TEST_CASE("aux_feature_loss: identical inputs give 0") {
  std::mt19937_64 rng(5);
  const Matrix mel = random_matrix(rng, 30, 20);
  const std::vector<double> lf0(30, std::log(220.0));
  CHECK(aux_feature_loss(lf0, lf0, std::vector<bool>(30, true), mel, mel) == 0.0);
}

TEST_CASE("aux_feature_loss: constant mel offset gives |c|") {
  std::mt19937_64 rng(6);
  const Matrix mel = random_matrix(rng, 25, 16);
  for (double c : {0.5, -1.25, 3.0}) {
    Matrix shifted = mel;
    for (double& v : shifted.data()) v += c;
    const std::vector<double> lf0(25, 5.0);
    CHECK(aux_feature_loss(lf0, lf0, std::vector<bool>(25, true), shifted, mel) ==
          doctest::Approx(std::fabs(c)).epsilon(1e-12));
  }
}

TEST_CASE("aux_feature_loss: matches the elementwise oracle on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lf0(4.0, 7.0);
  std::bernoulli_distribution coin(0.7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = 5 + static_cast<std::size_t>(trial % 40);
    std::vector<double> a(frames), b(frames);
    std::vector<bool> voiced(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      a[i] = lf0(rng);
      b[i] = lf0(rng);
      voiced[i] = coin(rng);
    }
    const Matrix ma = random_matrix(rng, frames, 12);
    const Matrix mb = random_matrix(rng, frames, 12);
    std::vector<double> va, vb;
    for (std::size_t i = 0; i < frames; ++i) {
      if (!voiced[i]) continue;
      va.push_back(a[i]);
      vb.push_back(b[i]);
    }
    const double oracle = brute_rms(va, vb) + brute_mean_abs(ma, mb);
    CHECK(std::fabs(aux_feature_loss(a, b, voiced, ma, mb) - oracle) < 1e-9);
  }
}

TEST_CASE("aux_feature_loss: unvoiced frames do not contribute") {
  std::mt19937_64 rng(8);
  const Matrix mel = random_matrix(rng, 6, 4);
  const std::vector<double> a{5.0, 5.1, 9.0, 5.3, -3.0, 5.5};
  const std::vector<double> b{5.0, 5.1, 1.0, 5.3, 8.0, 5.5};
  const std::vector<bool> voiced{true, true, false, true, false, true};
  CHECK(aux_feature_loss(a, b, voiced, mel, mel) == 0.0);
}

TEST_CASE("aux_feature_loss: shape mismatches are rejected") {
  const std::vector<double> lf0(4, 5.0);
  CHECK_THROWS_AS(aux_feature_loss(lf0, std::vector<double>(3, 5.0), std::vector<bool>(4, true), Matrix(4, 2),
                                   Matrix(4, 2)),
                  InvalidArgument);
  CHECK_THROWS_AS(aux_feature_loss(lf0, lf0, std::vector<bool>(3, true), Matrix(4, 2), Matrix(4, 2)),
                  InvalidArgument);
  CHECK_THROWS_AS(aux_feature_loss(lf0, lf0, std::vector<bool>(4, true), Matrix(4, 2), Matrix(4, 3)),
                  InvalidArgument);
}

// ------------------------------------------------------------ duration_loss

TEST_CASE("duration_loss: equal durations give 0") {
  const DurationPair d{{3, 5, 8, 2}, {10, 12}};
  CHECK(duration_loss(d, d) == 0.0);
}

TEST_CASE("duration_loss: phone off by one everywhere gives 1") {
  const DurationPair truth{{3, 5, 8, 2}, {10, 12}};
  DurationPair pred = truth;
  for (double& v : pred.phone) v += 1.0;
  CHECK(duration_loss(pred, truth) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("duration_loss: matches the oracle on random pairs") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t phones = 1 + static_cast<std::size_t>(trial % 30);
    const std::size_t notes = 1 + static_cast<std::size_t>(trial % 7);
    const DurationPair pred{random_durations(rng, phones), random_durations(rng, notes)};
    const DurationPair truth{random_durations(rng, phones), random_durations(rng, notes)};
    const double oracle = brute_rms(pred.phone, truth.phone) + brute_rms(pred.note, truth.note);
    CHECK(std::fabs(duration_loss(pred, truth) - oracle) < 1e-9);
  }
}

TEST_CASE("duration_loss: length mismatch and negative durations are rejected") {
  const DurationPair a{{1, 2, 3}, {4}};
  CHECK_THROWS_AS(duration_loss(a, DurationPair{{1, 2}, {4}}), InvalidArgument);
  CHECK_THROWS_AS(duration_loss(a, DurationPair{{1, 2, 3}, {4, 5}}), InvalidArgument);
  CHECK_THROWS_AS(duration_loss(a, DurationPair{{1, -2, 3}, {4}}), InvalidArgument);
}

// ------------------------------------------------------------ f0_rmse

TEST_CASE("f0_rmse: identical contours give 0") {
  const F0Contour f0 = F0Contour::from_values({0, 220, 221, 0, 300}, 256);
  const F0Rmse r = f0_rmse(f0, f0);
  CHECK(r.hz == 0.0);
  CHECK(r.compared_frames == 3);
  CHECK_FALSE(r.no_common_voiced);
}

TEST_CASE("f0_rmse: constant 10 Hz offset gives 10") {
  std::vector<double> a(50), b(50);
  for (std::size_t i = 0; i < 50; ++i) {
    a[i] = 150.0 + static_cast<double>(i);
    b[i] = a[i] + 10.0;
  }
  CHECK(f0_rmse(F0Contour::from_values(b, 256), F0Contour::from_values(a, 256)).hz ==
        doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("f0_rmse: mixed voicing uses the voiced intersection") {
  const F0Contour pred = F0Contour::from_values({0, 200, 230, 250, 0, 100}, 256);
  const F0Contour truth = F0Contour::from_values({210, 210, 0, 240, 0, 103}, 256);
  // Common voiced frames 1, 3, 5 with errors -10, 10, -3.
  const F0Rmse r = f0_rmse(pred, truth);
  CHECK(r.compared_frames == 3);
  CHECK(r.hz == doctest::Approx(std::sqrt((100.0 + 100.0 + 9.0) / 3.0)).epsilon(1e-14));
}

TEST_CASE("f0_rmse: matches the oracle on random contours") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> hz(80.0, 800.0);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = coin(rng) ? hz(rng) : 0.0;
      b[i] = coin(rng) ? hz(rng) : 0.0;
    }
    std::vector<double> va, vb;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] > 0.0 && b[i] > 0.0) {
        va.push_back(a[i]);
        vb.push_back(b[i]);
      }
    }
    const F0Rmse r = f0_rmse(F0Contour::from_values(a, 256), F0Contour::from_values(b, 256));
    CHECK(r.compared_frames == va.size());
    CHECK(r.no_common_voiced == va.empty());
    CHECK(std::fabs(r.hz - brute_rms(va, vb)) < 1e-9);
  }
}

TEST_CASE("f0_rmse: no common voiced frames returns 0 with the flag") {
  const F0Rmse r = f0_rmse(F0Contour::from_values({0, 200, 0}, 256), F0Contour::from_values({100, 0, 0}, 256));
  CHECK(r.hz == 0.0);
  CHECK(r.compared_frames == 0);
  CHECK(r.no_common_voiced);
}

TEST_CASE("f0_rmse: frame count mismatch is rejected") {
  CHECK_THROWS_AS(f0_rmse(F0Contour::from_values({1, 2}, 256), F0Contour::from_values({1, 2, 3}, 256)),
                  InvalidArgument);
}

// ------------------------------------------------------------ duration_rmse

TEST_CASE("duration_rmse: identical and constant offset") {
  const DurationPair truth{{4, 6, 9}, {19}};
  CHECK(duration_rmse(truth, truth) == 0.0);
  DurationPair pred = truth;
  for (double& v : pred.phone) v += 2.0;
  pred.note = {50};  // notes are not part of this metric
  CHECK(duration_rmse(pred, truth) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("duration_rmse: matches the oracle on random durations") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 50);
    const DurationPair pred{random_durations(rng, n), {}};
    const DurationPair truth{random_durations(rng, n), {}};
    CHECK(std::fabs(duration_rmse(pred, truth) - brute_rms(pred.phone, truth.phone)) < 1e-9);
  }
}

TEST_CASE("duration_rmse: length mismatch is rejected") {
  CHECK_THROWS_AS(duration_rmse(DurationPair{{1, 2}, {}}, DurationPair{{1}, {}}), InvalidArgument);
}

TEST_CASE("losses are non-negative on random inputs") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_matrix(rng, 8, 5);
    const Matrix b = random_matrix(rng, 8, 5);
    CHECK(mean_abs_difference(a, b) >= 0.0);
    const DurationPair p{random_durations(rng, 6), random_durations(rng, 3)};
    const DurationPair q{random_durations(rng, 6), random_durations(rng, 3)};
    CHECK(duration_loss(p, q) >= 0.0);
    CHECK(duration_rmse(p, q) >= 0.0);
  }
}
