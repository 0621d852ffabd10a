#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

#include "atomic_file.hpp"
#include "hnsynth/analysis.hpp"
#include "hnsynth/errors.hpp"
#include "hnsynth/kernels.hpp"

namespace hnsynth {

void AnalysisConfig::validate(int sample_rate) const {
  if (!(f0_min > 0.0 && f0_min < f0_max && f0_max < sample_rate / 2.0)) {
    throw InvalidArgument("analysis requires 0 < f0_min < f0_max < sample_rate/2");
  }
  if (hop_size == 0) throw InvalidArgument("analysis hop_size must be positive");
  if (k_max < 1) throw InvalidArgument("k_max must be at least 1");
  if (median_length == 0) throw InvalidArgument("median_length must be at least 1");
}

AnalysisConfig default_analysis_config(int sample_rate) {
  AnalysisConfig cfg;
  cfg.hop_size = default_spectral_config(sample_rate).hop_size;
  return cfg;
}

namespace {

constexpr double kSilenceEnergyPerSample = 1e-10;
constexpr double kOctaveTolerance = 0.9;

struct PitchCandidate {
  double f0 = 0.0;
  double clarity = 0.0;
};

class AutocorrelationTracker {
 public:
  AutocorrelationTracker(const Waveform& x, const AnalysisConfig& cfg)
      : cfg_(cfg), sample_rate_(x.sample_rate) {
    const double sr = x.sample_rate;
    min_lag_ = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(sr / cfg.f0_max)));
    max_lag_ = static_cast<std::size_t>(std::ceil(sr / cfg.f0_min)) + 1;
    window_ = 2 * max_lag_;
    span_ = window_ + max_lag_ + 1;
    // Signal zero-extended so every frame span is addressable.
    pad_ = span_ + cfg.hop_size;
    padded_.assign(x.size() + 2 * pad_, 0.0);
    std::copy(x.samples.begin(), x.samples.end(), padded_.begin() + static_cast<std::ptrdiff_t>(pad_));
    energy_prefix_.assign(padded_.size() + 1, 0.0);
    for (std::size_t i = 0; i < padded_.size(); ++i) energy_prefix_[i + 1] = energy_prefix_[i] + padded_[i] * padded_[i];
    length_ = x.size();
  }

  PitchCandidate frame(std::size_t m) const {
    // Keep the span inside the signal when the signal is long enough.
    const auto center = static_cast<std::ptrdiff_t>(m * cfg_.hop_size + cfg_.hop_size / 2);
    std::ptrdiff_t start = center - static_cast<std::ptrdiff_t>(span_ / 2);
    if (length_ >= span_) {
      start = std::clamp<std::ptrdiff_t>(start, 0, static_cast<std::ptrdiff_t>(length_ - span_));
    }
    const std::size_t base = static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(pad_));

    const double e0 = energy(base, window_);
    if (e0 < kSilenceEnergyPerSample * static_cast<double>(window_)) return {};

    const auto& k = kernels::active();
    const std::span<const double> ref(padded_.data() + base, window_);
    std::vector<double> r(max_lag_ + 2, 0.0);
    for (std::size_t lag = min_lag_ - 1; lag <= max_lag_ + 1; ++lag) {
      const double el = energy(base + lag, window_);
      const double denom = std::sqrt(e0 * el);
      if (denom <= 0.0) continue;
      r[lag] = k.dot(ref, std::span<const double>(padded_.data() + base + lag, window_)) / denom;
    }

    double best = 0.0;
    for (std::size_t lag = min_lag_; lag <= max_lag_; ++lag) {
      if (is_peak(r, lag)) best = std::max(best, r[lag]);
    }
    if (best < cfg_.voicing_threshold) return {};
    for (std::size_t lag = min_lag_; lag <= max_lag_; ++lag) {
      if (!is_peak(r, lag) || r[lag] < kOctaveTolerance * best) continue;
      const double a = r[lag - 1], b = r[lag], c = r[lag + 1];
      const double curvature = a - 2.0 * b + c;
      const double offset = curvature < 0.0 ? std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5) : 0.0;
      const double f0 = sample_rate_ / (static_cast<double>(lag) + offset);
      if (f0 < cfg_.f0_min || f0 > cfg_.f0_max) return {};
      return {f0, b};
    }
    return {};
  }

 private:
  static bool is_peak(const std::vector<double>& r, std::size_t lag) {
    return r[lag] >= r[lag - 1] && r[lag] > r[lag + 1];
  }

  double energy(std::size_t start, std::size_t count) const {
    return energy_prefix_[start + count] - energy_prefix_[start];
  }

  const AnalysisConfig& cfg_;
  double sample_rate_;
  std::size_t min_lag_ = 0;
  std::size_t max_lag_ = 0;
  std::size_t window_ = 0;
  std::size_t span_ = 0;
  std::size_t pad_ = 0;
  std::size_t length_ = 0;
  std::vector<double> padded_;
  std::vector<double> energy_prefix_;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Median over the voiced neighbours of each voiced frame.
std::vector<double> median_filter_voiced(const std::vector<double>& f0, std::size_t length) {
  if (length <= 1) return f0;
  const std::size_t half = length / 2;
  std::vector<double> out(f0.size(), 0.0);
  std::vector<double> window;
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (f0[i] <= 0.0) continue;
    window.clear();
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(f0.size() - 1, i + half);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (f0[j] > 0.0) window.push_back(f0[j]);
    }
    out[i] = median(window);
  }
  return out;
}

}  // namespace

F0Contour estimate_f0(const Waveform& x, const AnalysisConfig& cfg) {
  x.validate();
  cfg.validate(x.sample_rate);
  if (x.size() < 2 * cfg.hop_size) throw InvalidArgument("input shorter than two analysis frames");

  const std::size_t frames = (x.size() + cfg.hop_size - 1) / cfg.hop_size;
  const AutocorrelationTracker tracker(x, cfg);
  std::vector<double> raw(frames, 0.0);
  for (std::size_t m = 0; m < frames; ++m) raw[m] = tracker.frame(m).f0;
  return F0Contour::from_values(median_filter_voiced(raw, cfg.median_length), static_cast<int>(cfg.hop_size));
}

F0Contour load_f0(const std::filesystem::path& path, int* sample_rate) {
  std::ifstream in(path);
  if (!in) {
    if (!std::filesystem::exists(path)) throw FileNotFound(path.string());
    throw IoError("cannot open " + path.string());
  }
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError("missing header line", line_no);
  static const std::regex header(R"(^#\s*hop=(\d+)\s+sr=(\d+)\s*$)");
  std::smatch match;
  if (!std::regex_match(line, match, header)) throw FormatError("expected '# hop=<samples> sr=<hz>'", line_no);
  const int hop = std::stoi(match[1]);
  const int sr = std::stoi(match[2]);
  if (hop <= 0 || sr <= 0) throw FormatError("hop and sr must be positive", line_no);

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) throw FormatError("not a number: '" + line + "'", line_no);
    if (!std::isfinite(v) || v < 0.0) throw FormatError("f0 must be finite and >= 0", line_no);
    values.push_back(v);
  }
  if (sample_rate) *sample_rate = sr;
  return F0Contour::from_values(std::move(values), hop);
}

void save_f0(const F0Contour& f0, int sample_rate, const std::filesystem::path& path) {
  f0.validate();
  std::ostringstream out;
  out << "# hop=" << f0.hop_size << " sr=" << sample_rate << "\n";
  out << std::setprecision(17);
  for (double v : f0.values) out << v << "\n";
  detail::write_file_atomic(path, out.str());
}

}  // namespace hnsynth
