#include "hnsynth/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hnsynth/errors.hpp"
#include "hnsynth/kernels.hpp"

namespace hnsynth {

namespace {

// Left anchor index and right-anchor weight for every output sample.
struct InterpolationGrid {
  std::vector<std::size_t> left;
  std::vector<double> weight;

  InterpolationGrid(std::size_t frames, std::size_t hop, std::size_t out_len) : left(out_len), weight(out_len) {
    const double h = static_cast<double>(hop);
    const double first_anchor = h / 2.0;
    const double last_anchor = static_cast<double>(frames - 1) * h + h / 2.0;
    for (std::size_t n = 0; n < out_len; ++n) {
      const double pos = static_cast<double>(n);
      if (frames == 1 || pos <= first_anchor) {
        left[n] = 0;
        weight[n] = 0.0;
      } else if (pos >= last_anchor) {
        left[n] = frames - 1;
        weight[n] = 0.0;
      } else {
        const double u = (pos - first_anchor) / h;
        const auto m = static_cast<std::size_t>(u);
        left[n] = m;
        weight[n] = u - static_cast<double>(m);
      }
    }
  }

  // values(m) for m in [0, frames)
  template <typename Values>
  void apply(const Values& values, std::span<double> out) const {
    for (std::size_t n = 0; n < out.size(); ++n) {
      const double w = weight[n];
      const double a = values(left[n]);
      out[n] = w == 0.0 ? a : a + w * (values(left[n] + 1) - a);
    }
  }
};

void check_interpolation_args(std::size_t frames, std::size_t hop, std::size_t out_len) {
  if (frames == 0) throw InvalidArgument("interpolation needs at least one frame");
  if (hop == 0) throw InvalidArgument("hop size must be positive");
  if (out_len > frames * hop) throw InvalidArgument("out_len exceeds frames * hop_size");
}

// Unvoiced frames take the value of the nearest voiced frame (earlier one on ties).
std::vector<double> fill_unvoiced(const F0Contour& f0) {
  const std::size_t n = f0.frames();
  std::vector<double> filled(f0.values);
  std::vector<std::ptrdiff_t> prev(n, -1), next(n, -1);
  std::ptrdiff_t last = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (f0.voiced[i]) last = static_cast<std::ptrdiff_t>(i);
    prev[i] = last;
  }
  last = -1;
  for (std::size_t i = n; i-- > 0;) {
    if (f0.voiced[i]) last = static_cast<std::ptrdiff_t>(i);
    next[i] = last;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (f0.voiced[i]) continue;
    const auto idx = static_cast<std::ptrdiff_t>(i);
    std::ptrdiff_t pick = prev[i];
    if (pick < 0 || (next[i] >= 0 && next[i] - idx < idx - pick)) pick = next[i];
    filled[i] = f0.values[static_cast<std::size_t>(pick)];
  }
  return filled;
}

}  // namespace

std::vector<double> interpolate_to_samples(std::span<const double> frame_values, std::size_t hop_size,
                                           std::size_t out_len) {
  check_interpolation_args(frame_values.size(), hop_size, out_len);
  const InterpolationGrid grid(frame_values.size(), hop_size, out_len);
  std::vector<double> out(out_len);
  grid.apply([&](std::size_t m) { return frame_values[m]; }, out);
  return out;
}

std::vector<double> cumulative_phase(std::span<const double> freq_hz, int sample_rate, double phi0) {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  std::vector<double> phase(freq_hz.size());
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  const long double sr = sample_rate;
  long double turns = 0.0L;
  for (std::size_t n = 0; n < freq_hz.size(); ++n) {
    const double f = freq_hz[n];
    if (!std::isfinite(f) || f < 0.0) throw InvalidArgument("frequencies must be finite and non-negative");
    turns += static_cast<long double>(f) / sr;
    phase[n] = static_cast<double>(two_pi * turns + static_cast<long double>(phi0));
  }
  return phase;
}

Waveform harmonic_synthesize(const F0Contour& f0, const HarmonicAmplitudes& amplitudes, int sample_rate) {
  return harmonic_synthesize(f0, amplitudes, sample_rate, InitialPhases::zeros(amplitudes.k_max()));
}

Waveform harmonic_synthesize(const F0Contour& f0, const HarmonicAmplitudes& amplitudes, int sample_rate,
                             const InitialPhases& phi0) {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  f0.validate();
  amplitudes.validate();
  phi0.validate();
  if (amplitudes.frames() != f0.frames()) throw InvalidArgument("harmonic amplitude frames differ from f0 frames");
  if (phi0.values.size() != amplitudes.k_max()) throw InvalidArgument("initial phase count differs from harmonic count");
  if (f0.frames() == 0) return {{}, sample_rate};

  const double nyquist = sample_rate / 2.0;
  for (double v : f0.values) {
    if (v >= nyquist) throw InvalidArgument("f0 at or above Nyquist");
  }

  const std::size_t frames = f0.frames();
  const auto hop = static_cast<std::size_t>(f0.hop_size);
  const std::size_t len = frames * hop;
  std::vector<double> out(len, 0.0);
  if (std::none_of(f0.voiced.begin(), f0.voiced.end(), [](bool v) { return v; })) {
    return {std::move(out), sample_rate};
  }

  const InterpolationGrid grid(frames, hop, len);
  const std::vector<double> filled = fill_unvoiced(f0);
  std::vector<double> pitch(len), voicing(len);
  grid.apply([&](std::size_t m) { return filled[m]; }, pitch);
  grid.apply([&](std::size_t m) { return f0.voiced[m] ? 1.0 : 0.0; }, voicing);

  // Fundamental phase in turns, reduced to [0, 1); harmonic k uses k times it.
  std::vector<double> cycles(len);
  {
    const long double sr = sample_rate;
    long double turns = 0.0L;
    for (std::size_t n = 0; n < len; ++n) {
      turns += static_cast<long double>(pitch[n]) / sr;
      turns -= std::floor(turns);
      cycles[n] = static_cast<double>(turns);
    }
  }

  const auto& kernels = kernels::active();
  const double min_pitch = *std::min_element(pitch.begin(), pitch.end());
  std::vector<double> amp(len);
  for (std::size_t k = 1; k <= amplitudes.k_max(); ++k) {
    const double kd = static_cast<double>(k);
    if (kd * min_pitch >= nyquist) break;
    const std::size_t col = k - 1;
    grid.apply([&](std::size_t m) { return amplitudes.values(m, col); }, amp);
    bool any = false;
    for (std::size_t n = 0; n < len; ++n) {
      const double a = kd * pitch[n] < nyquist ? amp[n] * voicing[n] : 0.0;
      amp[n] = a;
      any = any || a != 0.0;
    }
    if (!any) continue;
    kernels.harmonic_accumulate(out, amp, cycles, kd, phi0.values[col] / (2.0 * std::numbers::pi));
  }
  return {std::move(out), sample_rate};
}

Waveform noise_synthesize(const NoiseMagnitudeSpectrum& noise, const SpectralConfig& spectral, std::uint64_t seed,
                          int sample_rate) {
  spectral.validate();
  noise.validate();
  if (noise.bins() != spectral.bins()) throw InvalidArgument("noise bin count does not match fft_size/2 + 1");
  const std::size_t frames = noise.frames();
  const std::size_t len = frames * spectral.hop_size;
  if (frames == 0) return {{}, sample_rate};

  std::mt19937_64 rng(seed);
  // Top 53 bits to a double in [0, 1); the std distributions are not portable bit-for-bit.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  ComplexSpectrogram s(frames, noise.bins());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < noise.bins(); ++k) {
      const double phase = std::numbers::pi * (2.0 * uniform() - 1.0);
      s(t, k) = std::polar(noise.values(t, k), phase);
    }
  }
  Waveform y = istft(s, spectral, len, sample_rate);
  const double gain = std::sqrt(static_cast<double>(spectral.fft_size) / static_cast<double>(spectral.hop_size));
  for (double& v : y.samples) v *= gain;
  return y;
}

Waveform dsp_combine(const Waveform& harmonic, const Waveform& noise) {
  if (harmonic.sample_rate != noise.sample_rate) throw InvalidArgument("sample rates differ");
  if (harmonic.size() != noise.size()) throw InvalidArgument("waveform lengths differ");
  std::vector<double> out(harmonic.size());
  kernels::active().add(harmonic.samples, noise.samples, out);
  return {std::move(out), harmonic.sample_rate};
}

}  // namespace hnsynth
