#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hnsynth/errors.hpp"
#include "hnsynth/io.hpp"

namespace hnsynth {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "fft_size",   "hop_size",          "win_size",     "window",       "center_padding",
      "n_mels",     "f_min",             "f_max",        "log_floor",    "f0_min",
      "f0_max",     "k_max",             "peak_halfwidth_bins",          "refine_iters",
      "voicing_threshold",               "median_length", "lambda_dsp",  "lambda_mel",
      "lambda_fm",  "seed",              "output_format",
  };
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  Reader(const std::map<std::string, std::string>& values, const std::map<std::string, std::size_t>& lines)
      : values_(values), lines_(lines) {}

  template <typename T>
  void number(const std::string& key, T& target) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    const std::string& v = it->second;
    T parsed{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail(key, "expected a number, got '" + v + "'");
    target = parsed;
  }

  void boolean(const std::string& key, bool& target) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    if (it->second == "true") {
      target = true;
    } else if (it->second == "false") {
      target = false;
    } else {
      fail(key, "expected true or false");
    }
  }

  void window(const std::string& key, WindowKind& target) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    if (it->second == "hann") {
      target = WindowKind::Hann;
    } else if (it->second == "hamming") {
      target = WindowKind::Hamming;
    } else if (it->second == "rectangular") {
      target = WindowKind::Rectangular;
    } else {
      fail(key, "expected hann, hamming or rectangular");
    }
  }

  void format(const std::string& key, SampleFormat& target) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    if (it->second == "pcm16") {
      target = SampleFormat::Pcm16;
    } else if (it->second == "float32") {
      target = SampleFormat::Float32;
    } else {
      fail(key, "expected pcm16 or float32");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const auto it = lines_.find(key);
    throw FormatError(key + ": " + why, it == lines_.end() ? 0 : it->second);
  }

  const std::map<std::string, std::string>& values_;
  const std::map<std::string, std::size_t>& lines_;
};

}  // namespace

void ConfigOverrides::set(const std::string& key, const std::string& value, std::size_t line) {
  const auto& keys = config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw FormatError("unknown config key '" + key + "'", line);
  values_[key] = value;
  lines_[key] = line;
}

ConfigOverrides ConfigOverrides::parse(const std::string& text) {
  ConfigOverrides out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw FormatError("expected 'key = value'", line_no);
    out.set(key, value, line_no);
  }
  return out;
}

ConfigOverrides ConfigOverrides::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    if (!std::filesystem::exists(path)) throw FileNotFound(path.string());
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

Settings ConfigOverrides::resolve(int sample_rate) const {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  Settings s;
  s.spectral = default_spectral_config(sample_rate);
  s.analysis = default_analysis_config(sample_rate);
  s.mel = default_mel_config(sample_rate);

  const Reader r(values_, lines_);
  r.number("fft_size", s.spectral.fft_size);
  r.number("hop_size", s.spectral.hop_size);
  r.number("win_size", s.spectral.win_size);
  r.window("window", s.spectral.window);
  r.boolean("center_padding", s.spectral.center_padding);
  if (contains("fft_size") && !contains("win_size")) s.spectral.win_size = s.spectral.fft_size;
  s.analysis.hop_size = s.spectral.hop_size;

  r.number("n_mels", s.mel.n_mels);
  r.number("f_min", s.mel.f_min);
  r.number("f_max", s.mel.f_max);
  r.number("log_floor", s.mel.log_floor);
  s.mel.spectral = s.spectral;

  r.number("f0_min", s.analysis.f0_min);
  r.number("f0_max", s.analysis.f0_max);
  r.number("k_max", s.analysis.k_max);
  r.number("peak_halfwidth_bins", s.analysis.peak_halfwidth_bins);
  r.number("refine_iters", s.analysis.refine_iters);
  r.number("voicing_threshold", s.analysis.voicing_threshold);
  r.number("median_length", s.analysis.median_length);

  r.number("lambda_dsp", s.weights.lambda_dsp);
  r.number("lambda_mel", s.weights.lambda_mel);
  r.number("lambda_fm", s.weights.lambda_fm);
  r.number("seed", s.seed);
  r.format("output_format", s.output_format);

  s.spectral.validate();
  s.mel.validate(sample_rate);
  s.analysis.validate(sample_rate);
  s.weights.validate();
  return s;
}

}  // namespace hnsynth
