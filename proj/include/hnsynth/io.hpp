#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hnsynth/analysis.hpp"
#include "hnsynth/losses.hpp"
#include "hnsynth/spectral.hpp"
#include "hnsynth/types.hpp"

namespace hnsynth {

// ---------------------------------------------------------------- WAV

enum class SampleFormat { Pcm16, Float32 };

struct WavInfo {
  int channels = 0;
  SampleFormat format = SampleFormat::Pcm16;
  // Set when a stereo file was averaged down to mono.
  bool downmixed = false;
};

// Reads PCM16 or float32 WAV (mono, or stereo averaged to mono). PCM16 maps
// to q/32768. Throws FileNotFound, MalformedHeader, UnsupportedCodec or
// TruncatedFile.
Waveform read_wav(const std::filesystem::path& path, WavInfo* info = nullptr);

// Writes a mono WAV atomically and returns how many samples were clipped to
// [-1, 1]. PCM16 stores clamp(round(32768 x), -32768, 32767).
std::size_t write_wav(const Waveform& x, const std::filesystem::path& path, SampleFormat format);

// ---------------------------------------------------------------- features

// Everything `synth` needs to rebuild a waveform.
struct FeatureBundle {
  F0Contour f0;
  HarmonicAmplitudes harmonics;
  NoiseMagnitudeSpectrum noise;
  int sample_rate = 0;
  std::size_t num_samples = 0;
  SpectralConfig spectral;
  AnalysisConfig analysis;

  // Shared frame count and hop, frames > 0, component invariants.
  void validate() const;
};

inline constexpr std::uint32_t kFeatureFormatVersion = 1;

// Container layout, all integers little-endian:
//   bytes 0..3   magic "HNSF"
//   bytes 4..7   u32 format version
//   bytes 8..15  u64 length H of the JSON header
//   H bytes      UTF-8 JSON: sample_rate, num_samples, frames, hop_size,
//                k_max, bins, spectral, analysis and a "payload" list naming
//                each matrix with its shape
//   payload      float32 little-endian, row-major, in order:
//                f0 [frames], harmonics [frames x k_max], noise [frames x bins]
// Matrices are stored as float32, so only float32-representable values
// survive a round trip unchanged.
void save_features(const FeatureBundle& bundle, const std::filesystem::path& path);
FeatureBundle load_features(const std::filesystem::path& path);

// ---------------------------------------------------------------- config

// Every tunable parameter, resolved for one sample rate.
struct Settings {
  SpectralConfig spectral;
  MelConfig mel;
  AnalysisConfig analysis;
  LossWeights weights;
  std::uint64_t seed = 0;
  SampleFormat output_format = SampleFormat::Pcm16;
};

// Flat key/value overrides, one `key = value` per line, `#` starts a comment.
//
// Keys: fft_size hop_size win_size window(hann|hamming|rectangular)
// center_padding(true|false) n_mels f_min f_max log_floor f0_min f0_max
// k_max peak_halfwidth_bins refine_iters voicing_threshold median_length
// lambda_dsp lambda_mel lambda_fm seed output_format(pcm16|float32).
// hop_size sets both the spectral and the analysis hop; the mel
// filterbank always uses the spectral framing.
class ConfigOverrides {
 public:
  static ConfigOverrides parse(const std::string& text);
  static ConfigOverrides load(const std::filesystem::path& path);

  // Throws FormatError for an unknown key.
  void set(const std::string& key, const std::string& value, std::size_t line = 0);
  bool contains(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, std::string>& values() const { return values_; }

  // Defaults for `sample_rate` with these overrides applied, validated.
  Settings resolve(int sample_rate) const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
};

const std::vector<std::string>& config_keys();

}  // namespace hnsynth
