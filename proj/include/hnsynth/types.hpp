#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hnsynth {

// Mono audio. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  Waveform() = default;
  Waveform(std::vector<double> s, int sr) : samples(std::move(s)), sample_rate(sr) {}

  std::size_t size() const noexcept { return samples.size(); }
  // Throws InvalidArgument unless sample_rate > 0 and every sample is finite.
  void validate() const;
};

// Dense row-major matrix of reals. Rows are frames.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Frame-level fundamental frequency. A value of 0 marks an unvoiced frame.
struct F0Contour {
  int hop_size = 0;
  std::vector<double> values;
  std::vector<bool> voiced;

  std::size_t frames() const noexcept { return values.size(); }

  // Builds a contour whose voicing is inferred from non-zero values.
  static F0Contour from_values(std::vector<double> values, int hop_size);
  // values >= 0, values == 0 <=> !voiced, hop_size > 0.
  void validate() const;

  friend bool operator==(const F0Contour&, const F0Contour&) = default;
};

// frames x K per-harmonic amplitudes.
struct HarmonicAmplitudes {
  Matrix values;

  HarmonicAmplitudes() = default;
  HarmonicAmplitudes(std::size_t frames, std::size_t k_max) : values(frames, k_max) {}
  explicit HarmonicAmplitudes(Matrix m) : values(std::move(m)) {}

  std::size_t frames() const noexcept { return values.rows(); }
  std::size_t k_max() const noexcept { return values.cols(); }
  void validate() const;

  friend bool operator==(const HarmonicAmplitudes&, const HarmonicAmplitudes&) = default;
};

// frames x (fft_size/2 + 1) non-negative magnitudes.
struct NoiseMagnitudeSpectrum {
  Matrix values;

  NoiseMagnitudeSpectrum() = default;
  NoiseMagnitudeSpectrum(std::size_t frames, std::size_t bins) : values(frames, bins) {}
  explicit NoiseMagnitudeSpectrum(Matrix m) : values(std::move(m)) {}

  std::size_t frames() const noexcept { return values.rows(); }
  std::size_t bins() const noexcept { return values.cols(); }
  void validate() const;

  friend bool operator==(const NoiseMagnitudeSpectrum&, const NoiseMagnitudeSpectrum&) = default;
};

// Per-harmonic starting phase in radians, each in [-pi, pi).
struct InitialPhases {
  std::vector<double> values;

  static InitialPhases zeros(std::size_t k_max) { return {std::vector<double>(k_max, 0.0)}; }
  void validate() const;
};

// frames x bins complex STFT.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t frames, std::size_t bins) : frames_(frames), bins_(bins), data_(frames * bins) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }

  std::complex<double>& operator()(std::size_t t, std::size_t k) { return data_[t * bins_ + k]; }
  const std::complex<double>& operator()(std::size_t t, std::size_t k) const { return data_[t * bins_ + k]; }

  std::span<std::complex<double>> frame(std::size_t t) { return {data_.data() + t * bins_, bins_}; }
  std::span<const std::complex<double>> frame(std::size_t t) const { return {data_.data() + t * bins_, bins_}; }

  std::vector<std::complex<double>>& data() noexcept { return data_; }
  const std::vector<std::complex<double>>& data() const noexcept { return data_; }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<std::complex<double>> data_;
};

}  // namespace hnsynth
