#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "harmonic_fit.hpp"
#include "hnsynth/errors.hpp"
#include "hnsynth/kernels.hpp"
#include "hnsynth/losses.hpp"
#include "hnsynth/signal_core.hpp"

namespace hnsynth {

namespace {

using cplx = std::complex<double>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTinyMagnitude = 1e-300;
constexpr double kMaxCorrection = 2.0;
constexpr double kRefineSpacing = 0.05;  // bins
constexpr int kRefineRounds = 2;
constexpr int kMaxSweeps = 60;
constexpr double kHannBandBins = 64.0;

void check_inputs(const Waveform& x, const F0Contour& f0, const AnalysisConfig& cfg, const SpectralConfig& spectral) {
  x.validate();
  f0.validate();
  spectral.validate();
  cfg.validate(x.sample_rate);
  if (static_cast<std::size_t>(f0.hop_size) != spectral.hop_size) {
    throw InvalidArgument("f0 hop size differs from spectral hop size");
  }
}

// Frame centre, pulled inward so the window stays inside the signal when it fits.
std::ptrdiff_t frame_centre(const SpectralConfig& spectral, std::size_t m, std::size_t len) {
  const auto centre = static_cast<std::ptrdiff_t>(m * spectral.hop_size + spectral.hop_size / 2);
  const auto half = static_cast<std::ptrdiff_t>(spectral.fft_size / 2);
  if (len < spectral.fft_size) return centre;
  return std::clamp(centre, half, static_cast<std::ptrdiff_t>(len) - half);
}

// Peak bin within +-halfwidth of `bin`, refined by a parabola through log magnitudes.
double find_peak(std::span<const double> mag, double bin, std::size_t halfwidth) {
  const auto last = static_cast<std::ptrdiff_t>(mag.size()) - 1;
  const auto centre = static_cast<std::ptrdiff_t>(std::lround(bin));
  const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(centre - static_cast<std::ptrdiff_t>(halfwidth), 0, last);
  const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(centre + static_cast<std::ptrdiff_t>(halfwidth), 0, last);
  std::ptrdiff_t best = lo;
  for (std::ptrdiff_t i = lo + 1; i <= hi; ++i) {
    if (mag[static_cast<std::size_t>(i)] > mag[static_cast<std::size_t>(best)]) best = i;
  }
  if (best == 0 || best == last) return static_cast<double>(best);
  const double peak = mag[static_cast<std::size_t>(best)];
  const double left = mag[static_cast<std::size_t>(best - 1)];
  const double right = mag[static_cast<std::size_t>(best + 1)];
  if (!(peak >= left && peak >= right) || peak <= kTinyMagnitude) return static_cast<double>(best);
  const double a = std::log(std::max(left, kTinyMagnitude));
  const double b = std::log(peak);
  const double c = std::log(std::max(right, kTinyMagnitude));
  const double curvature = a - 2.0 * b + c;
  if (curvature >= 0.0) return static_cast<double>(best);
  return static_cast<double>(best) + std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
}

// Closed-form transform of the analysis window, phase referenced to the frame centre.
// All built-in windows are cosine sums a0 - a1 cos(2 pi i / L).
class WindowTransform {
 public:
  explicit WindowTransform(const SpectralConfig& spectral)
      : length_(static_cast<double>(spectral.win_size)),
        shift_(static_cast<double>((spectral.fft_size - spectral.win_size) / 2) -
               static_cast<double>(spectral.fft_size / 2)) {
    switch (spectral.window) {
      case WindowKind::Hann:
        a0_ = 0.5;
        a1_ = 0.5;
        break;
      case WindowKind::Hamming:
        a0_ = 0.54;
        a1_ = 0.46;
        break;
      case WindowKind::Rectangular:
        break;
    }
  }

  cplx operator()(double omega) const {
    const double r = std::remainder(omega, kTwoPi);
    const double half = 0.5 * r;
    const double step = std::numbers::pi / length_;  // half a window bin
    const double s0 = std::sin(half);
    const double c0 = std::cos(half);
    const double sp = s0 * std::cos(step) + c0 * std::sin(step);
    const double sm = s0 * std::cos(step) - c0 * std::sin(step);
    constexpr double kNear = 1e-7;
    if (std::abs(s0) < kNear || std::abs(sp) < kNear || std::abs(sm) < kNear) return direct(r);
    // The three Dirichlet kernels share sin(L r / 2) up to sign and a fixed phase.
    const cplx body = a0_ / s0 - 0.5 * a1_ * (std::polar(1.0, step) / sp + std::polar(1.0, -step) / sm);
    return std::polar(std::sin(half * length_), -r * (shift_ + 0.5 * (length_ - 1.0))) * body;
  }

 private:
  // sum_{i<L} exp(-j omega i)
  cplx dirichlet(double omega) const {
    const double r = std::remainder(omega, kTwoPi);
    const double half = 0.5 * r;
    if (std::abs(half) < 1e-12) return {length_, -r * length_ * (length_ - 1.0) / 2.0};
    return std::polar(std::sin(half * length_) / std::sin(half), -half * (length_ - 1.0));
  }

  cplx direct(double r) const {
    const double step = kTwoPi / length_;
    const cplx body = a0_ * dirichlet(r) - 0.5 * a1_ * (dirichlet(r - step) + dirichlet(r + step));
    return std::polar(1.0, -r * shift_) * body;
  }

  double length_;
  double shift_;
  double a0_ = 1.0;
  double a1_ = 0.0;
};

struct Partial {
  std::size_t k = 0;
  double omega = 0.0;
  cplx phasor;  // frame modelled as |phasor| cos(omega (j - F/2) + arg phasor)
};

// Fits harmonic partials inside one windowed frame.
class FrameFitter {
 public:
  explicit FrameFitter(const SpectralConfig& spectral)
      : window_(analysis_window(spectral)),
        transform_(spectral),
        per_bin_(kTwoPi / static_cast<double>(spectral.fft_size)),
        band_(spectral.window == WindowKind::Hann ? kHannBandBins * per_bin_
                                                  : std::numeric_limits<double>::infinity()),
        frame_(spectral.fft_size) {
    const double delta = kRefineSpacing * per_bin_;
    const auto half = static_cast<double>(spectral.fft_size / 2);
    shift_.resize(spectral.fft_size);
    for (std::size_t j = 0; j < shift_.size(); ++j) shift_[j] = std::polar(1.0, -delta * (static_cast<double>(j) - half));
  }

  std::span<const double> window() const { return window_; }

  // Loads the windowed frame starting at `start`; returns the window mass inside x.
  double load(const Waveform& x, std::ptrdiff_t start) {
    const auto len = static_cast<std::ptrdiff_t>(x.size());
    gain_ = 0.0;
    for (std::size_t j = 0; j < frame_.size(); ++j) {
      const std::ptrdiff_t n = start + static_cast<std::ptrdiff_t>(j);
      const bool inside = n >= 0 && n < len;
      frame_[j] = inside ? window_[j] * x.samples[static_cast<std::size_t>(n)] : 0.0;
      if (inside) gain_ += window_[j];
    }
    truncated_ = start < 0 || start + static_cast<std::ptrdiff_t>(frame_.size()) > len;
    return gain_;
  }

  // Refines the partial frequencies from their coarse values and solves for the phasors.
  void fit(std::vector<Partial>& partials) {
    measured_.resize(partials.size());
    for (std::size_t j = 0; j < partials.size(); ++j) {
      partials[j].omega = refine(partials[j].omega, [](double) { return cplx{}; });
      measured_[j] = dtft(partials[j].omega);
    }
    if (truncated_) {
      // The closed-form transform does not describe a clipped window.
      for (std::size_t j = 0; j < partials.size(); ++j) partials[j].phasor = 2.0 * measured_[j] / gain_;
      return;
    }
    solve(partials);
    for (int round = 0; round < kRefineRounds; ++round) {
      for (std::size_t j = 0; j < partials.size(); ++j) {
        partials[j].omega = refine(partials[j].omega, [&](double omega) { return leakage(partials, j, omega); });
        measured_[j] = dtft(partials[j].omega);
      }
      solve(partials);
    }
  }

 private:
  struct Coupling {
    std::size_t k;
    cplx minus;
    cplx plus;
  };

  bool near_mirror(double mirror) const { return std::min(mirror, kTwoPi - mirror) < band_; }

  // Windowed transform of the loaded frame, phase referenced to the frame centre.
  cplx dtft(double omega) const {
    const std::size_t n = frame_.size();
    const cplx step = std::polar(1.0, -omega);
    cplx rot = std::polar(1.0, omega * static_cast<double>(n / 2));
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n; ++j, rot *= step) acc += frame_[j] * rot;
    return acc;
  }

  // Transforms at omega - delta, omega and omega + delta in one pass.
  std::array<cplx, 3> dtft3(double omega) const {
    const std::size_t n = frame_.size();
    const cplx step = std::polar(1.0, -omega);
    cplx rot = std::polar(1.0, omega * static_cast<double>(n / 2));
    cplx lo = 0.0, mid = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < n; ++j, rot *= step) {
      const cplx y = frame_[j] * rot;
      mid += y;
      hi += y * shift_[j];
      lo += y * std::conj(shift_[j]);
    }
    return {lo, mid, hi};
  }

  // What every other partial, and the mirror image of partial j, puts at omega.
  cplx leakage(const std::vector<Partial>& partials, std::size_t j, double omega) const {
    cplx sum = 0.0;
    for (std::size_t k = 0; k < partials.size(); ++k) {
      const Partial& p = partials[k];
      if (k != j && std::abs(omega - p.omega) < band_) sum += 0.5 * p.phasor * transform_(omega - p.omega);
      if (near_mirror(omega + p.omega)) sum += 0.5 * std::conj(p.phasor) * transform_(omega + p.omega);
    }
    return sum;
  }

  // Parabola through |X - leak| at spacing kRefineSpacing around omega.
  template <typename Leak>
  double refine(double omega, Leak&& leak) const {
    const double delta = kRefineSpacing * per_bin_;
    auto values = dtft3(omega);
    const double left = std::abs(values[0] - leak(omega - delta));
    const double mid = std::abs(values[1] - leak(omega));
    const double right = std::abs(values[2] - leak(omega + delta));
    const double curvature = left - 2.0 * mid + right;
    if (curvature >= 0.0) return omega;
    return omega + std::clamp(0.5 * (left - right) / curvature, -2.0, 2.0) * delta;
  }

  // Gauss-Seidel on X_j = sum_k c_k W(w_j - w_k) / 2 + conj(c_k) W(w_j + w_k) / 2.
  void solve(std::vector<Partial>& partials) {
    const std::size_t n = partials.size();
    const cplx self = 0.5 * transform_(0.0);
    double scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      partials[j].phasor = measured_[j] / self;
      scale = std::max(scale, std::abs(partials[j].phasor));
    }
    if (scale == 0.0) return;
    neighbours_.assign(n, {});
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const double diff = partials[j].omega - partials[k].omega;
        const double mirror = partials[j].omega + partials[k].omega;
        Coupling c{k, 0.0, 0.0};
        if (k != j && std::abs(diff) < band_) c.minus = 0.5 * transform_(diff);
        if (near_mirror(mirror)) c.plus = 0.5 * transform_(mirror);
        if (c.minus != 0.0 || c.plus != 0.0) neighbours_[j].push_back(c);
      }
    }
    const std::vector<Partial> initial = partials;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double change = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        cplx rest = measured_[j];
        for (const Coupling& c : neighbours_[j]) {
          rest -= c.minus * partials[c.k].phasor + c.plus * std::conj(partials[c.k].phasor);
        }
        const cplx next = rest / self;
        change = std::max(change, std::abs(next - partials[j].phasor));
        partials[j].phasor = next;
      }
      if (!std::isfinite(change) || change > 1e3 * scale) {
        partials = initial;
        return;
      }
      if (change <= 1e-13 * scale) return;
    }
  }

  std::vector<double> window_;
  WindowTransform transform_;
  double per_bin_;
  double band_;
  std::vector<double> frame_;
  std::vector<cplx> shift_;
  std::vector<cplx> measured_;
  std::vector<std::vector<Coupling>> neighbours_;
  double gain_ = 0.0;
  bool truncated_ = false;
};

Waveform trimmed(Waveform w, std::size_t len) {
  w.samples.resize(len, 0.0);
  return w;
}

}  // namespace

namespace detail {

HarmonicFit fit_harmonics(const Waveform& x, const F0Contour& f0, const AnalysisConfig& cfg,
                          const SpectralConfig& spectral, bool reconstruct) {
  const double nyquist = x.sample_rate / 2.0;
  const double bin_hz = static_cast<double>(x.sample_rate) / static_cast<double>(spectral.fft_size);
  const auto fft = static_cast<std::ptrdiff_t>(spectral.fft_size);
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  FrameFitter fitter(spectral);
  const std::span<const double> window = fitter.window();
  const auto& kernels = kernels::active();

  HarmonicFit out{HarmonicAmplitudes(f0.frames(), cfg.k_max), std::nullopt};
  std::vector<double> sum, weight, nearest;
  std::vector<std::ptrdiff_t> distance;
  if (reconstruct) {
    sum.assign(x.size(), 0.0);
    weight.assign(x.size(), 0.0);
    // Model value from the frame whose centre is closest, used where every window vanishes.
    nearest.assign(x.size(), 0.0);
    distance.assign(x.size(), std::numeric_limits<std::ptrdiff_t>::max());
  }
  std::vector<cplx> spectrum(spectral.bins());
  std::vector<double> mag(spectral.bins());
  std::vector<double> model(spectral.fft_size);
  std::vector<Partial> partials;

  for (std::size_t m = 0; m < f0.frames(); ++m) {
    const std::ptrdiff_t centre = frame_centre(spectral, m, x.size());
    const std::ptrdiff_t start = centre - fft / 2;
    std::fill(model.begin(), model.end(), 0.0);
    if (f0.voiced[m] && fitter.load(x, start) > 0.0) {
      spectrum_at(x.samples, centre, spectral, window, spectrum);
      kernels.magnitude(spectrum, mag);
      partials.clear();
      for (std::size_t k = 1; k <= cfg.k_max; ++k) {
        const double fk = static_cast<double>(k) * f0.values[m];
        if (fk >= nyquist) break;
        const double bin = find_peak(mag, fk / bin_hz, cfg.peak_halfwidth_bins);
        partials.push_back({k, bin * kTwoPi / static_cast<double>(fft), 0.0});
      }
      fitter.fit(partials);
      for (const Partial& p : partials) {
        out.amplitudes.values(m, p.k - 1) = std::abs(p.phasor);
        if (!reconstruct) continue;
        const cplx step = std::polar(1.0, p.omega);
        cplx rot = p.phasor * std::polar(1.0, -p.omega * static_cast<double>(fft / 2));
        for (std::size_t j = 0; j < model.size(); ++j, rot *= step) model[j] += rot.real();
      }
    }
    if (!reconstruct) continue;
    // Unvoiced frames still add their window, so the model fades across them.
    for (std::ptrdiff_t j = 0; j < fft; ++j) {
      const std::ptrdiff_t n = start + j;
      if (n < 0 || n >= len) continue;
      const auto i = static_cast<std::size_t>(n);
      const auto u = static_cast<std::size_t>(j);
      sum[i] += window[u] * model[u];
      weight[i] += window[u];
      if (std::abs(j - fft / 2) < distance[i]) {
        distance[i] = std::abs(j - fft / 2);
        nearest[i] = model[u];
      }
    }
  }
  if (reconstruct) {
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = weight[i] > 1e-9 ? sum[i] / weight[i] : nearest[i];
    out.reconstruction = Waveform(std::move(sum), x.sample_rate);
  }
  return out;
}

}  // namespace detail

HarmonicAmplitudes estimate_harmonics(const Waveform& x, const F0Contour& f0, const AnalysisConfig& cfg,
                                      const SpectralConfig& spectral) {
  check_inputs(x, f0, cfg, spectral);
  const HarmonicAmplitudes measured = detail::fit_harmonics(x, f0, cfg, spectral, false).amplitudes;
  if (cfg.refine_iters == 0 || x.samples.empty()) return measured;

  MelConfig mel = default_mel_config(x.sample_rate);
  mel.spectral = spectral;
  auto loss_of = [&](const HarmonicAmplitudes& h) {
    return mel_l1(trimmed(harmonic_synthesize(f0, h, x.sample_rate), x.size()), x, mel);
  };

  HarmonicAmplitudes best = measured;
  double best_loss = loss_of(best);
  for (std::size_t it = 0; it < cfg.refine_iters; ++it) {
    const Waveform resynth = trimmed(harmonic_synthesize(f0, best, x.sample_rate), x.size());
    const HarmonicAmplitudes seen = detail::fit_harmonics(resynth, f0, cfg, spectral, false).amplitudes;
    HarmonicAmplitudes next = best;
    auto& values = next.values.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double s = seen.values.data()[i];
      if (s <= 0.0 || values[i] <= 0.0) continue;
      const double ratio = std::clamp(measured.values.data()[i] / s, 1.0 / kMaxCorrection, kMaxCorrection);
      values[i] *= ratio;
    }
    const double loss = loss_of(next);
    if (!(loss < best_loss)) break;
    best = std::move(next);
    best_loss = loss;
  }
  return best;
}

Waveform phase_aligned_harmonics(const Waveform& x, const F0Contour& f0, const AnalysisConfig& cfg,
                                 const SpectralConfig& spectral) {
  check_inputs(x, f0, cfg, spectral);
  return *detail::fit_harmonics(x, f0, cfg, spectral, true).reconstruction;
}

}  // namespace hnsynth
