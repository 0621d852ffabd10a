#include "hnsynth/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "fft.hpp"
#include "hnsynth/errors.hpp"
#include "hnsynth/kernels.hpp"

namespace hnsynth {

std::size_t SpectralConfig::frames_for(std::size_t length) const {
  return std::max<std::size_t>(1, (length + hop_size - 1) / hop_size);
}

void SpectralConfig::validate() const {
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0) throw InvalidArgument("fft_size must be a power of two");
  if (hop_size == 0 || hop_size > win_size || win_size > fft_size) {
    throw InvalidArgument("spectral config requires 0 < hop_size <= win_size <= fft_size");
  }
}

bool SpectralConfig::satisfies_cola() const {
  validate();
  const std::vector<double> w = analysis_window(*this);
  double lo = INFINITY;
  double hi = 0.0;
  for (std::size_t n = 0; n < hop_size; ++n) {
    double sum = 0.0;
    for (std::size_t i = n; i < fft_size; i += hop_size) sum += w[i] * w[i];
    lo = std::min(lo, sum);
    hi = std::max(hi, sum);
  }
  return lo > 0.0 && (hi - lo) <= 1e-9 * hi;
}

SpectralConfig default_spectral_config(int sample_rate) {
  SpectralConfig cfg;
  if (sample_rate < 32000) {
    cfg.fft_size = 1024;
    cfg.hop_size = 256;
    cfg.win_size = 1024;
  }
  return cfg;
}

std::vector<SpectralConfig> default_multi_resolution_configs() {
  std::vector<SpectralConfig> out;
  for (std::size_t fft : {512u, 1024u, 2048u}) {
    SpectralConfig c;
    c.fft_size = fft;
    c.win_size = fft;
    c.hop_size = fft / 4;
    out.push_back(c);
  }
  return out;
}

std::vector<double> analysis_window(const SpectralConfig& cfg) {
  std::vector<double> w(cfg.fft_size, 0.0);
  const std::size_t offset = (cfg.fft_size - cfg.win_size) / 2;
  const double n = static_cast<double>(cfg.win_size);
  for (std::size_t i = 0; i < cfg.win_size; ++i) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
    double v = 1.0;
    switch (cfg.window) {
      case WindowKind::Hann:
        v = 0.5 - 0.5 * std::cos(phase);
        break;
      case WindowKind::Hamming:
        v = 0.54 - 0.46 * std::cos(phase);
        break;
      case WindowKind::Rectangular:
        break;
    }
    w[offset + i] = v;
  }
  return w;
}

void MelConfig::validate(int sample_rate) const {
  spectral.validate();
  if (n_mels < 1) throw InvalidArgument("n_mels must be at least 1");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0)) {
    throw InvalidArgument("mel range requires 0 <= f_min < f_max <= sample_rate/2");
  }
  if (!(log_floor > 0.0)) throw InvalidArgument("log_floor must be positive");
}

MelConfig default_mel_config(int sample_rate) {
  MelConfig cfg;
  cfg.spectral = default_spectral_config(sample_rate);
  cfg.f_max = sample_rate / 2.0;
  return cfg;
}

namespace {
constexpr double kLinearHzPerMel = 200.0 / 3.0;
constexpr double kLogStartHz = 1000.0;
constexpr double kLogStartMel = kLogStartHz / kLinearHzPerMel;
const double kLogStep = std::log(6.4) / 27.0;
}  // namespace

double hz_to_mel(double hz) {
  if (hz < kLogStartHz) return hz / kLinearHzPerMel;
  return kLogStartMel + std::log(hz / kLogStartHz) / kLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kLogStartMel) return mel * kLinearHzPerMel;
  return kLogStartHz * std::exp(kLogStep * (mel - kLogStartMel));
}

MelFilterbank::MelFilterbank(int sample_rate, std::size_t fft_size, std::size_t n_mels, double f_min, double f_max)
    : bins_(fft_size / 2 + 1) {
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  bands_.resize(n_mels);
  for (std::size_t b = 0; b < n_mels; ++b) {
    const double lower = edges[b];
    const double centre = edges[b + 1];
    const double upper = edges[b + 2];
    const double norm = 2.0 / (upper - lower);
    std::vector<double> row(bins_, 0.0);
    std::size_t first = bins_;
    std::size_t last = 0;
    for (std::size_t k = 0; k < bins_; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double rising = (f - lower) / (centre - lower);
      const double falling = (upper - f) / (upper - centre);
      const double w = std::max(0.0, std::min(rising, falling)) * norm;
      if (w > 0.0) {
        row[k] = w;
        first = std::min(first, k);
        last = std::max(last, k);
      }
    }
    if (first <= last) {
      bands_[b].first_bin = first;
      bands_[b].weights.assign(row.begin() + static_cast<std::ptrdiff_t>(first),
                               row.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    }
  }
}

double MelFilterbank::weight(std::size_t band, std::size_t bin) const {
  const Band& b = bands_.at(band);
  if (bin < b.first_bin || bin >= b.first_bin + b.weights.size()) return 0.0;
  return b.weights[bin - b.first_bin];
}

void MelFilterbank::apply(std::span<const double> magnitude, std::span<double> out) const {
  const auto& k = kernels::active();
  for (std::size_t b = 0; b < bands_.size(); ++b) {
    const Band& band = bands_[b];
    out[b] = band.weights.empty() ? 0.0 : k.dot(band.weights, magnitude.subspan(band.first_bin, band.weights.size()));
  }
}

std::shared_ptr<const MelFilterbank> MelFilterbank::cached(int sample_rate, const MelConfig& cfg) {
  using Key = std::tuple<int, std::size_t, std::size_t, double, double>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const MelFilterbank>> cache;
  const Key key{sample_rate, cfg.spectral.fft_size, cfg.n_mels, cfg.f_min, cfg.f_max};
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) slot = std::make_shared<const MelFilterbank>(sample_rate, cfg.spectral.fft_size, cfg.n_mels, cfg.f_min, cfg.f_max);
  return slot;
}

void spectrum_at(std::span<const double> x, std::ptrdiff_t center, const SpectralConfig& cfg,
                 std::span<const double> window, std::span<std::complex<double>> out) {
  const auto n = static_cast<std::ptrdiff_t>(cfg.fft_size);
  const std::ptrdiff_t start = center - n / 2;
  std::vector<double> frame(cfg.fft_size, 0.0);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -start);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, static_cast<std::ptrdiff_t>(x.size()) - start);
  if (lo < hi) {
    const auto len = static_cast<std::size_t>(hi - lo);
    kernels::active().multiply(x.subspan(static_cast<std::size_t>(start + lo), len),
                               window.subspan(static_cast<std::size_t>(lo), len),
                               std::span<double>(frame).subspan(static_cast<std::size_t>(lo), len));
  }
  detail::RealFft::get(cfg.fft_size).forward(frame, out);
}

namespace {
std::ptrdiff_t frame_origin(const SpectralConfig& cfg, std::size_t t) {
  const auto origin = static_cast<std::ptrdiff_t>(t * cfg.hop_size);
  return cfg.center_padding ? origin - static_cast<std::ptrdiff_t>(cfg.fft_size / 2) : origin;
}
}  // namespace

ComplexSpectrogram stft(const Waveform& x, const SpectralConfig& cfg) {
  if (x.samples.empty()) throw InvalidArgument("stft of an empty waveform");
  cfg.validate();
  const std::vector<double> window = analysis_window(cfg);
  const std::size_t frames = cfg.frames_for(x.size());
  ComplexSpectrogram s(frames, cfg.bins());
  const auto half = static_cast<std::ptrdiff_t>(cfg.fft_size / 2);
  for (std::size_t t = 0; t < frames; ++t) {
    spectrum_at(x.samples, frame_origin(cfg, t) + half, cfg, window, s.frame(t));
  }
  return s;
}

Waveform istft(const ComplexSpectrogram& s, const SpectralConfig& cfg, std::size_t out_len, int sample_rate) {
  cfg.validate();
  if (!cfg.satisfies_cola()) throw InvalidArgument("istft requires a window/hop pair satisfying COLA");
  if (s.bins() != cfg.bins()) throw InvalidArgument("spectrogram bin count does not match fft_size/2 + 1");
  const std::vector<double> window = analysis_window(cfg);
  std::vector<double> squared(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) squared[i] = window[i] * window[i];

  const auto& k = kernels::active();
  const auto& fft = detail::RealFft::get(cfg.fft_size);
  const auto len = static_cast<std::ptrdiff_t>(out_len);
  const auto n = static_cast<std::ptrdiff_t>(cfg.fft_size);
  std::vector<double> y(out_len, 0.0);
  std::vector<double> envelope(out_len, 0.0);
  std::vector<double> frame(cfg.fft_size);
  for (std::size_t t = 0; t < s.frames(); ++t) {
    const std::ptrdiff_t start = frame_origin(cfg, t);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -start);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, len - start);
    if (lo >= hi) continue;
    fft.inverse(s.frame(t), frame);
    const auto count = static_cast<std::size_t>(hi - lo);
    const auto src = static_cast<std::size_t>(lo);
    const auto dst = static_cast<std::size_t>(start + lo);
    k.multiply_add(std::span<const double>(frame).subspan(src, count), std::span<const double>(window).subspan(src, count),
                   std::span<double>(y).subspan(dst, count));
    auto env = std::span<double>(envelope).subspan(dst, count);
    k.add(env, std::span<const double>(squared).subspan(src, count), env);
  }
  const double peak = *std::max_element(squared.begin(), squared.end());
  for (std::size_t i = 0; i < out_len; ++i) {
    y[i] = envelope[i] > 1e-10 * peak ? y[i] / envelope[i] : 0.0;
  }
  return {std::move(y), sample_rate};
}

Matrix magnitude(const ComplexSpectrogram& s) {
  Matrix m(s.frames(), s.bins());
  const auto& k = kernels::active();
  for (std::size_t t = 0; t < s.frames(); ++t) k.magnitude(s.frame(t), m.row(t));
  return m;
}

Matrix mel_spectrogram(const Waveform& x, const MelConfig& cfg) {
  if (x.samples.empty()) throw InvalidArgument("mel spectrogram of an empty waveform");
  cfg.validate(x.sample_rate);
  const Matrix mag = magnitude(stft(x, cfg.spectral));
  const auto bank = MelFilterbank::cached(x.sample_rate, cfg);
  Matrix mel(mag.rows(), cfg.n_mels);
  for (std::size_t t = 0; t < mag.rows(); ++t) {
    auto row = mel.row(t);
    bank->apply(mag.row(t), row);
    for (double& v : row) v = std::log(std::max(v, cfg.log_floor));
  }
  return mel;
}

std::vector<Matrix> multi_resolution_spectrograms(const Waveform& x, std::span<const SpectralConfig> cfgs) {
  if (cfgs.empty()) throw InvalidArgument("multi-resolution spectrograms need at least one config");
  std::vector<Matrix> out;
  out.reserve(cfgs.size());
  for (const SpectralConfig& cfg : cfgs) out.push_back(magnitude(stft(x, cfg)));
  return out;
}

}  // namespace hnsynth
