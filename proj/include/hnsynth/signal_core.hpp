#pragma once

// Harmonic-plus-noise waveform synthesis from frame-level features.
//
// Frame m of a contour with hop H is anchored at sample m*H + H/2. Per-sample
// values are linearly interpolated between anchors and held constant before
// the first and after the last anchor.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hnsynth/spectral.hpp"
#include "hnsynth/types.hpp"

namespace hnsynth {

inline constexpr std::size_t kDefaultHarmonics = 100;

// Requires a non-empty input and out_len <= frames * hop_size.
std::vector<double> interpolate_to_samples(std::span<const double> frame_values, std::size_t hop_size,
                                           std::size_t out_len);

// Unwrapped phase phi(n) = 2*pi * sum_{m=0..n} f(m)/sample_rate + phi0.
// The sum includes sample n itself; it is accumulated in long double.
std::vector<double> cumulative_phase(std::span<const double> freq_hz, int sample_rate, double phi0);

// Sum over k = 1..K of H_k(n) * sin(phi_k(n)) with f_k(n) = k * f0(n).
//
// Output length is frames * hop. Any (n, k) with k*f0(n) >= sample_rate/2
// contributes exactly zero, and so do samples whose interpolated voicing is
// zero. Across unvoiced frames the pitch is held at the nearest voiced value
// so the phase stays continuous while the voicing envelope fades the bank out.
Waveform harmonic_synthesize(const F0Contour& f0, const HarmonicAmplitudes& amplitudes, int sample_rate,
                             const InitialPhases& phi0);
Waveform harmonic_synthesize(const F0Contour& f0, const HarmonicAmplitudes& amplitudes, int sample_rate);

// Inverse STFT of N * exp(iP) with P drawn uniformly from [-pi, pi) by a
// 64-bit Mersenne Twister seeded with `seed`, scaled by sqrt(fft/hop) so that
// N = |STFT(white noise of variance s^2)| resynthesizes noise of variance s^2.
// Output length is frames * hop.
Waveform noise_synthesize(const NoiseMagnitudeSpectrum& noise, const SpectralConfig& spectral, std::uint64_t seed,
                          int sample_rate);

// Elementwise sum of the harmonic and noise parts.
Waveform dsp_combine(const Waveform& harmonic, const Waveform& noise);

}  // namespace hnsynth
