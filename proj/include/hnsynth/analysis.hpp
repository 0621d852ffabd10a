#pragma once

#include <cstddef>
#include <filesystem>

#include "hnsynth/spectral.hpp"
#include "hnsynth/types.hpp"

namespace hnsynth {

struct AnalysisConfig {
  double f0_min = 70.0;
  double f0_max = 1000.0;
  std::size_t hop_size = 512;
  std::size_t k_max = 100;
  std::size_t peak_halfwidth_bins = 2;
  std::size_t refine_iters = 0;
  // Minimum normalized autocorrelation peak for a frame to count as voiced.
  double voicing_threshold = 0.3;
  // Median filter length (frames) applied to the voiced part of the contour.
  std::size_t median_length = 5;

  // 0 < f0_min < f0_max < sample_rate/2, hop_size > 0, k_max >= 1.
  void validate(int sample_rate) const;
  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

// Defaults with hop_size matching default_spectral_config(sample_rate).
AnalysisConfig default_analysis_config(int sample_rate);

// Normalized-autocorrelation pitch tracker. Frame m is centred on sample
// m*hop + hop/2; there are ceil(len/hop) frames. Within each frame the
// smallest-lag autocorrelation peak reaching 90% of the strongest one is
// refined by parabolic interpolation; frames whose peak falls below
// voicing_threshold are unvoiced. Voiced runs are median filtered.
F0Contour estimate_f0(const Waveform& x, const AnalysisConfig& cfg);

// Reads the plain-text F0 format: first line "# hop=<samples> sr=<hz>", then
// one value in Hz per line, 0 for unvoiced. Blank lines are ignored.
F0Contour load_f0(const std::filesystem::path& path, int* sample_rate = nullptr);
void save_f0(const F0Contour& f0, int sample_rate, const std::filesystem::path& path);

// Per-frame harmonic amplitudes read off the windowed spectrum at k*f0.
//
// Each frame is analysed with a window centred on the frame anchor, moved
// inward at the signal edges so that it stays inside x. The largest magnitude
// within +-peak_halfwidth_bins of the bin nearest k*f0 seeds the frequency,
// which is sharpened on the windowed transform of x. The transform at that
// frequency, divided by half the window sum, reads 1 for a unit sinusoid;
// the window leakage that the harmonics of one frame put on each other is
// removed by solving the small coupled system between them.
// With refine_iters > 0 the amplitudes are multiplicatively corrected so that
// analysing the resynthesized harmonic part reproduces the measured values,
// keeping each step only while the mel L1 distance to x decreases.
HarmonicAmplitudes estimate_harmonics(const Waveform& x, const F0Contour& f0, const AnalysisConfig& cfg,
                                      const SpectralConfig& spectral);

// Harmonic part of x rebuilt frame by frame with measured phases: the
// amplitudes and phases found as in estimate_harmonics give each frame a sum
// of sinusoids, overlap-added under the analysis window and normalized by the
// window sum. Unlike harmonic_synthesize it is
// phase-locked to x, so x minus it leaves the aperiodic part.
Waveform phase_aligned_harmonics(const Waveform& x, const F0Contour& f0, const AnalysisConfig& cfg,
                                 const SpectralConfig& spectral);

// |STFT(x - harmonic)|
NoiseMagnitudeSpectrum estimate_noise(const Waveform& x, const Waveform& harmonic, const SpectralConfig& spectral);

struct AnalysisResult {
  F0Contour f0;
  HarmonicAmplitudes harmonics;
  NoiseMagnitudeSpectrum noise;
};

// estimate_f0, estimate_harmonics, then estimate_noise on the residual left
// by phase_aligned_harmonics, sharing one pass over the frames. cfg.hop_size must equal spectral.hop_size.
AnalysisResult analyze(const Waveform& x, const AnalysisConfig& cfg, const SpectralConfig& spectral);

}  // namespace hnsynth
