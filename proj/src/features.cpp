#include <cmath>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "atomic_file.hpp"
#include "byte_order.hpp"
#include "hnsynth/errors.hpp"
#include "hnsynth/io.hpp"

namespace hnsynth {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'H', 'N', 'S', 'F'};
constexpr std::size_t kPreambleSize = 16;

const char* window_name(WindowKind w) {
  switch (w) {
    case WindowKind::Hann:
      return "hann";
    case WindowKind::Hamming:
      return "hamming";
    case WindowKind::Rectangular:
      return "rectangular";
  }
  return "hann";
}

WindowKind window_from_name(const std::string& name) {
  if (name == "hann") return WindowKind::Hann;
  if (name == "hamming") return WindowKind::Hamming;
  if (name == "rectangular") return WindowKind::Rectangular;
  throw FormatError("unknown window '" + name + "'");
}

json to_json(const SpectralConfig& c) {
  return {{"fft_size", c.fft_size},
          {"hop_size", c.hop_size},
          {"win_size", c.win_size},
          {"window", window_name(c.window)},
          {"center_padding", c.center_padding}};
}

SpectralConfig spectral_from_json(const json& j) {
  SpectralConfig c;
  c.fft_size = j.at("fft_size").get<std::size_t>();
  c.hop_size = j.at("hop_size").get<std::size_t>();
  c.win_size = j.at("win_size").get<std::size_t>();
  c.window = window_from_name(j.at("window").get<std::string>());
  c.center_padding = j.at("center_padding").get<bool>();
  return c;
}

json to_json(const AnalysisConfig& c) {
  return {{"f0_min", c.f0_min},
          {"f0_max", c.f0_max},
          {"hop_size", c.hop_size},
          {"k_max", c.k_max},
          {"peak_halfwidth_bins", c.peak_halfwidth_bins},
          {"refine_iters", c.refine_iters},
          {"voicing_threshold", c.voicing_threshold},
          {"median_length", c.median_length}};
}

AnalysisConfig analysis_from_json(const json& j) {
  AnalysisConfig c;
  c.f0_min = j.at("f0_min").get<double>();
  c.f0_max = j.at("f0_max").get<double>();
  c.hop_size = j.at("hop_size").get<std::size_t>();
  c.k_max = j.at("k_max").get<std::size_t>();
  c.peak_halfwidth_bins = j.at("peak_halfwidth_bins").get<std::size_t>();
  c.refine_iters = j.at("refine_iters").get<std::size_t>();
  c.voicing_threshold = j.at("voicing_threshold").get<double>();
  c.median_length = j.at("median_length").get<std::size_t>();
  return c;
}

void put_floats(std::string& out, const std::vector<double>& values) {
  for (double v : values) detail::put_f32_le(out, static_cast<float>(v));
}

std::vector<double> get_floats(const unsigned char*& p, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i, p += 4) v[i] = detail::get_f32_le(p);
  return v;
}

}  // namespace

void FeatureBundle::validate() const {
  if (sample_rate <= 0) throw InvalidArgument("feature bundle sample rate must be positive");
  if (f0.frames() == 0) throw InvalidArgument("feature bundle has no frames");
  f0.validate();
  harmonics.validate();
  noise.validate();
  spectral.validate();
  if (harmonics.frames() != f0.frames() || noise.frames() != f0.frames()) {
    throw InvalidArgument("feature bundle components differ in frame count");
  }
  if (static_cast<std::size_t>(f0.hop_size) != spectral.hop_size) {
    throw InvalidArgument("feature bundle f0 hop differs from spectral hop");
  }
  if (noise.bins() != spectral.bins()) throw InvalidArgument("noise bins do not match the spectral config");
  if (num_samples > f0.frames() * spectral.hop_size) throw InvalidArgument("num_samples exceeds frames * hop");
  for (double v : f0.values) {
    if (static_cast<double>(static_cast<float>(v)) <= 0.0 && v > 0.0) {
      throw InvalidArgument("f0 value underflows float32");
    }
  }
}

void save_features(const FeatureBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  const std::size_t frames = bundle.f0.frames();
  json header = {
      {"version", kFeatureFormatVersion},
      {"sample_rate", bundle.sample_rate},
      {"num_samples", bundle.num_samples},
      {"frames", frames},
      {"hop_size", bundle.f0.hop_size},
      {"k_max", bundle.harmonics.k_max()},
      {"bins", bundle.noise.bins()},
      {"spectral", to_json(bundle.spectral)},
      {"analysis", to_json(bundle.analysis)},
      {"payload",
       json::array({
           {{"name", "f0"}, {"dtype", "float32le"}, {"shape", {frames}}},
           {{"name", "harmonics"}, {"dtype", "float32le"}, {"shape", {frames, bundle.harmonics.k_max()}}},
           {{"name", "noise"}, {"dtype", "float32le"}, {"shape", {frames, bundle.noise.bins()}}},
       })},
  };
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  detail::put_le<std::uint32_t>(out, kFeatureFormatVersion);
  detail::put_le<std::uint64_t>(out, text.size());
  out += text;
  put_floats(out, bundle.f0.values);
  put_floats(out, bundle.harmonics.values.data());
  put_floats(out, bundle.noise.values.data());
  detail::write_file_atomic(path, out);
}

FeatureBundle load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) throw FileNotFound(path.string());
    throw IoError("cannot open " + path.string());
  }
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < kPreambleSize) throw TruncatedFile("feature file shorter than its preamble");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw MalformedHeader("not a feature file");
  const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kFeatureFormatVersion) {
    throw VersionMismatch("feature format version " + std::to_string(version) + ", expected " +
                          std::to_string(kFeatureFormatVersion));
  }
  const auto header_len = detail::get_le<std::uint64_t>(bytes.data() + 8);
  if (header_len > bytes.size() - kPreambleSize) throw TruncatedFile("feature header truncated");

  FeatureBundle b;
  std::size_t frames = 0, k_max = 0, bins = 0;
  try {
    const json header = json::parse(bytes.begin() + kPreambleSize,
                                    bytes.begin() + static_cast<std::ptrdiff_t>(kPreambleSize + header_len));
    if (header.at("version").get<std::uint32_t>() != version) throw MalformedHeader("header version disagrees");
    b.sample_rate = header.at("sample_rate").get<int>();
    b.num_samples = header.at("num_samples").get<std::size_t>();
    frames = header.at("frames").get<std::size_t>();
    k_max = header.at("k_max").get<std::size_t>();
    bins = header.at("bins").get<std::size_t>();
    b.spectral = spectral_from_json(header.at("spectral"));
    b.analysis = analysis_from_json(header.at("analysis"));
    if (header.at("hop_size").get<std::size_t>() != b.spectral.hop_size) {
      throw MalformedHeader("hop_size disagrees with spectral config");
    }
  } catch (const json::exception& e) {
    throw MalformedHeader(std::string("bad feature header: ") + e.what());
  }

  const std::size_t floats = frames + frames * k_max + frames * bins;
  const std::size_t payload = bytes.size() - kPreambleSize - header_len;
  if (payload < 4 * floats) throw TruncatedFile("feature payload truncated");
  if (payload > 4 * floats) throw MalformedHeader("trailing bytes after feature payload");

  const unsigned char* p = bytes.data() + kPreambleSize + header_len;
  b.f0 = F0Contour::from_values(get_floats(p, frames), static_cast<int>(b.spectral.hop_size));
  b.harmonics = HarmonicAmplitudes(frames, k_max);
  b.harmonics.values.data() = get_floats(p, frames * k_max);
  b.noise = NoiseMagnitudeSpectrum(frames, bins);
  b.noise.values.data() = get_floats(p, frames * bins);
  try {
    b.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid feature data: ") + e.what());
  }
  return b;
}

}  // namespace hnsynth
