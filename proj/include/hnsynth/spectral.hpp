#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "hnsynth/types.hpp"

namespace hnsynth {

enum class WindowKind { Hann, Hamming, Rectangular };

// Framing parameters shared by every spectral operation.
//
// Frame t of a signal of length L (t = 0 .. ceil(L/hop) - 1) spans
// fft_size samples starting at t*hop - (center_padding ? fft_size/2 : 0);
// samples outside the signal read as zero. The window of length win_size
// sits in the middle of the fft_size frame.
struct SpectralConfig {
  std::size_t fft_size = 2048;
  std::size_t hop_size = 512;
  std::size_t win_size = 2048;
  WindowKind window = WindowKind::Hann;
  bool center_padding = true;

  std::size_t bins() const noexcept { return fft_size / 2 + 1; }
  std::size_t frames_for(std::size_t length) const;

  // 0 < hop <= win <= fft, fft a power of two.
  void validate() const;
  // True when the squared window overlap-adds to a constant at this hop,
  // which is what istft needs for exact reconstruction.
  bool satisfies_cola() const;

  friend bool operator==(const SpectralConfig&, const SpectralConfig&) = default;
};

// 44.1 kHz-class rates get fft/hop/win 2048/512/2048, lower rates 1024/256/1024.
SpectralConfig default_spectral_config(int sample_rate);

// fft {512, 1024, 2048}, hop = fft/4, Hann, centered.
std::vector<SpectralConfig> default_multi_resolution_configs();

// Window of length cfg.win_size zero-padded (centered) to cfg.fft_size.
std::vector<double> analysis_window(const SpectralConfig& cfg);

struct MelConfig {
  std::size_t n_mels = 80;
  double f_min = 0.0;
  double f_max = 22050.0;
  SpectralConfig spectral;
  double log_floor = 1e-5;

  void validate(int sample_rate) const;
  friend bool operator==(const MelConfig&, const MelConfig&) = default;
};

// 80 bands from 0 Hz to Nyquist over default_spectral_config(sample_rate).
MelConfig default_mel_config(int sample_rate);

// Slaney-style mel filterbank: mel scale linear below 1 kHz (200/3 Hz per
// mel) and logarithmic above (27 mels per factor 6.4), triangular bands on
// n_mels + 2 equally spaced mel points, each band scaled by
// 2 / (f_upper - f_lower) so all bands have equal area.
class MelFilterbank {
 public:
  MelFilterbank(int sample_rate, std::size_t fft_size, std::size_t n_mels, double f_min, double f_max);

  std::size_t n_mels() const noexcept { return bands_.size(); }
  std::size_t bins() const noexcept { return bins_; }
  // Weight of FFT bin `bin` in band `band`.
  double weight(std::size_t band, std::size_t bin) const;
  // out[b] = sum_k weight(b, k) * magnitude[k]
  void apply(std::span<const double> magnitude, std::span<double> out) const;

  // Shared immutable instance for a parameter set.
  static std::shared_ptr<const MelFilterbank> cached(int sample_rate, const MelConfig& cfg);

 private:
  struct Band {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };
  std::size_t bins_;
  std::vector<Band> bands_;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

ComplexSpectrogram stft(const Waveform& x, const SpectralConfig& cfg);

// Weighted overlap-add inverse. Each sample is divided by the sum of squared
// windows covering it; samples no window covers come out as zero.
Waveform istft(const ComplexSpectrogram& s, const SpectralConfig& cfg, std::size_t out_len, int sample_rate);

// |S|, frames x bins.
Matrix magnitude(const ComplexSpectrogram& s);

// Spectrum of the fft_size frame centered on `center` (may lie outside the signal).
void spectrum_at(std::span<const double> x, std::ptrdiff_t center, const SpectralConfig& cfg,
                 std::span<const double> window, std::span<std::complex<double>> out);

// log(max(mel_filterbank * |STFT(x)|, log_floor)), frames x n_mels.
Matrix mel_spectrogram(const Waveform& x, const MelConfig& cfg);

// |STFT(x)| for each configuration, in order.
std::vector<Matrix> multi_resolution_spectrograms(const Waveform& x, std::span<const SpectralConfig> cfgs);

}  // namespace hnsynth
