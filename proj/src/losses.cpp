#include "hnsynth/losses.hpp"

#include <cmath>

#include "hnsynth/errors.hpp"
#include "hnsynth/kernels.hpp"

namespace hnsynth {

namespace {

double rms_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("sequence lengths differ");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

void check_durations(const DurationPair& d) {
  for (const auto* seq : {&d.phone, &d.note}) {
    for (double v : *seq) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("durations must be finite and >= 0");
    }
  }
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {lambda_dsp, lambda_mel, lambda_fm}) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("loss weights must be finite and >= 0");
  }
}

double mean_abs_difference(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("matrix shapes differ");
  if (a.empty()) return 0.0;
  return kernels::active().abs_diff_sum(a.data(), b.data()) / static_cast<double>(a.data().size());
}

double mel_l1(const Waveform& a, const Waveform& b, const MelConfig& mel) {
  if (a.sample_rate != b.sample_rate) throw InvalidArgument("sample rates differ");
  if (a.size() != b.size()) throw InvalidArgument("waveform lengths differ");
  return mean_abs_difference(mel_spectrogram(a, mel), mel_spectrogram(b, mel));
}

double dsp_loss(const Waveform& y_dsp, const Waveform& y, const MelConfig& mel, const LossWeights& w) {
  w.validate();
  return w.lambda_dsp * mel_l1(y_dsp, y, mel);
}

double aux_feature_loss(std::span<const double> lf0_pred, std::span<const double> lf0_true,
                        const std::vector<bool>& voiced, const Matrix& mel_pred, const Matrix& mel_true) {
  if (lf0_pred.size() != lf0_true.size() || voiced.size() != lf0_pred.size()) {
    throw InvalidArgument("log-F0 sequences and voicing mask differ in length");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < voiced.size(); ++i) {
    if (!voiced[i]) continue;
    const double d = lf0_pred[i] - lf0_true[i];
    sum += d * d;
    ++count;
  }
  const double lf0_term = count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
  return lf0_term + mean_abs_difference(mel_pred, mel_true);
}

double duration_loss(const DurationPair& pred, const DurationPair& truth) {
  check_durations(pred);
  check_durations(truth);
  if (pred.phone.size() != truth.phone.size() || pred.note.size() != truth.note.size()) {
    throw InvalidArgument("duration sequence lengths differ");
  }
  return rms_difference(pred.phone, truth.phone) + rms_difference(pred.note, truth.note);
}

F0Rmse f0_rmse(const F0Contour& pred, const F0Contour& truth) {
  if (pred.frames() != truth.frames()) throw InvalidArgument("f0 contours differ in frame count");
  F0Rmse out;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.frames(); ++i) {
    if (!pred.voiced[i] || !truth.voiced[i]) continue;
    const double d = pred.values[i] - truth.values[i];
    sum += d * d;
    ++out.compared_frames;
  }
  if (out.compared_frames == 0) {
    out.no_common_voiced = true;
    return out;
  }
  out.hz = std::sqrt(sum / static_cast<double>(out.compared_frames));
  return out;
}

double duration_rmse(const DurationPair& pred, const DurationPair& truth) {
  check_durations(pred);
  check_durations(truth);
  if (pred.phone.size() != truth.phone.size()) throw InvalidArgument("phone duration lengths differ");
  return rms_difference(pred.phone, truth.phone);
}

}  // namespace hnsynth
