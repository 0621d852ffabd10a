#pragma once

// Reconstruction losses and objective metrics. All norms are mean-reduced so
// values do not depend on clip length: an "L1" term is a mean absolute
// difference and an "L2" term is a root-mean-square difference.

#include <span>
#include <vector>

#include "hnsynth/spectral.hpp"
#include "hnsynth/types.hpp"

namespace hnsynth {

struct LossWeights {
  double lambda_dsp = 45.0;
  double lambda_mel = 45.0;
  // Feature-matching weight; carried for config compatibility, no loss uses it.
  double lambda_fm = 2.0;

  void validate() const;
};

// Durations in frames.
struct DurationPair {
  std::vector<double> phone;
  std::vector<double> note;
};

// Mean absolute difference of two equally shaped matrices.
double mean_abs_difference(const Matrix& a, const Matrix& b);

// mean |Mel(a) - Mel(b)|
double mel_l1(const Waveform& a, const Waveform& b, const MelConfig& mel);

// lambda_dsp * mel_l1(y_dsp, y)
double dsp_loss(const Waveform& y_dsp, const Waveform& y, const MelConfig& mel, const LossWeights& w);

// RMS log-F0 error over frames where `voiced` is set, plus the mean absolute
// mel difference.
double aux_feature_loss(std::span<const double> lf0_pred, std::span<const double> lf0_true,
                        const std::vector<bool>& voiced, const Matrix& mel_pred, const Matrix& mel_true);

// RMS(phone error) + RMS(note error)
double duration_loss(const DurationPair& pred, const DurationPair& truth);

struct F0Rmse {
  double hz = 0.0;
  std::size_t compared_frames = 0;
  // Set when no frame is voiced in both contours; hz is then 0.
  bool no_common_voiced = false;
};

// RMS difference in Hz over frames voiced in both contours.
F0Rmse f0_rmse(const F0Contour& pred, const F0Contour& truth);

// RMS phone-duration error in frames.
double duration_rmse(const DurationPair& pred, const DurationPair& truth);

}  // namespace hnsynth
