#include "hnsynth/pipeline.hpp"

#include "hnsynth/errors.hpp"
#include "hnsynth/signal_core.hpp"

namespace hnsynth {

FeatureBundle analyze_to_bundle(const Waveform& x, const Settings& settings, const std::optional<F0Contour>& f0) {
  FeatureBundle b;
  b.sample_rate = x.sample_rate;
  b.num_samples = x.size();
  b.spectral = settings.spectral;
  b.analysis = settings.analysis;
  if (f0) {
    if (static_cast<std::size_t>(f0->hop_size) != settings.spectral.hop_size) {
      throw InvalidArgument("imported f0 hop differs from the spectral hop");
    }
    // Trailing frames missing from an imported contour are unvoiced; extra ones are dropped.
    const std::size_t frames = settings.spectral.frames_for(x.size());
    b.f0 = *f0;
    b.f0.values.resize(frames, 0.0);
    b.f0.voiced.resize(frames, false);
    b.harmonics = estimate_harmonics(x, b.f0, settings.analysis, settings.spectral);
    b.noise = estimate_noise(x, phase_aligned_harmonics(x, b.f0, settings.analysis, settings.spectral),
                             settings.spectral);
  } else {
    AnalysisResult r = analyze(x, settings.analysis, settings.spectral);
    b.f0 = std::move(r.f0);
    b.harmonics = std::move(r.harmonics);
    b.noise = std::move(r.noise);
  }
  return b;
}

Waveform synthesize_bundle(const FeatureBundle& bundle, std::uint64_t seed) {
  bundle.validate();
  const Waveform harmonic = harmonic_synthesize(bundle.f0, bundle.harmonics, bundle.sample_rate);
  const Waveform noise = noise_synthesize(bundle.noise, bundle.spectral, seed, bundle.sample_rate);
  Waveform y = dsp_combine(harmonic, noise);
  y.samples.resize(bundle.num_samples);
  return y;
}

}  // namespace hnsynth
