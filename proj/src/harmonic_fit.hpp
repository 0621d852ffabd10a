#pragma once

#include <optional>

#include "hnsynth/analysis.hpp"

namespace hnsynth::detail {

struct HarmonicFit {
  HarmonicAmplitudes amplitudes;
  std::optional<Waveform> reconstruction;  // set when requested
};

// One pass over the voiced frames measuring every harmonic. With `reconstruct`,
// also overlap-adds the per-frame sinusoid models into a waveform aligned with x.
HarmonicFit fit_harmonics(const Waveform& x, const F0Contour& f0, const AnalysisConfig& cfg,
                          const SpectralConfig& spectral, bool reconstruct);

}  // namespace hnsynth::detail
