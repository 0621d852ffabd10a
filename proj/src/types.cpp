#include "hnsynth/types.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hnsynth/errors.hpp"

namespace hnsynth {

namespace {
void require_non_negative_finite(const Matrix& m, const char* what) {
  for (double v : m.data()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(std::string(what) + " must be finite and non-negative");
    }
  }
}
}  // namespace

void Waveform::validate() const {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s)) throw InvalidArgument("waveform contains a non-finite sample");
  }
}

F0Contour F0Contour::from_values(std::vector<double> values, int hop_size) {
  F0Contour c;
  c.hop_size = hop_size;
  c.voiced.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) c.voiced[i] = values[i] > 0.0;
  c.values = std::move(values);
  return c;
}

void F0Contour::validate() const {
  if (hop_size <= 0) throw InvalidArgument("f0 hop size must be positive");
  if (voiced.size() != values.size()) throw InvalidArgument("f0 voicing length differs from value length");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("f0 values must be finite and >= 0");
    if ((v > 0.0) != voiced[i]) throw InvalidArgument("f0 value/voicing mismatch at frame " + std::to_string(i));
  }
}

void HarmonicAmplitudes::validate() const {
  if (k_max() < 1) throw InvalidArgument("harmonic count must be at least 1");
  require_non_negative_finite(values, "harmonic amplitudes");
}

void NoiseMagnitudeSpectrum::validate() const { require_non_negative_finite(values, "noise magnitudes"); }

void InitialPhases::validate() const {
  for (double p : values) {
    if (!(p >= -std::numbers::pi && p < std::numbers::pi)) {
      throw InvalidArgument("initial phases must lie in [-pi, pi)");
    }
  }
}

}  // namespace hnsynth
