#include "hnsynth/analysis.hpp"

#include "harmonic_fit.hpp"
#include "hnsynth/errors.hpp"
#include "hnsynth/signal_core.hpp"

namespace hnsynth {

NoiseMagnitudeSpectrum estimate_noise(const Waveform& x, const Waveform& harmonic, const SpectralConfig& spectral) {
  if (x.sample_rate != harmonic.sample_rate) throw InvalidArgument("sample rates differ");
  if (x.size() != harmonic.size()) throw InvalidArgument("waveform lengths differ");
  Waveform residual(std::vector<double>(x.size()), x.sample_rate);
  for (std::size_t i = 0; i < x.size(); ++i) residual.samples[i] = x.samples[i] - harmonic.samples[i];
  return NoiseMagnitudeSpectrum(magnitude(stft(residual, spectral)));
}

AnalysisResult analyze(const Waveform& x, const AnalysisConfig& cfg, const SpectralConfig& spectral) {
  if (cfg.hop_size != spectral.hop_size) throw InvalidArgument("analysis hop differs from spectral hop");
  AnalysisResult out;
  out.f0 = estimate_f0(x, cfg);
  detail::HarmonicFit fit = detail::fit_harmonics(x, out.f0, cfg, spectral, true);
  out.harmonics = cfg.refine_iters == 0 ? std::move(fit.amplitudes) : estimate_harmonics(x, out.f0, cfg, spectral);
  out.noise = estimate_noise(x, *fit.reconstruction, spectral);
  return out;
}

}  // namespace hnsynth
