#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "atomic_file.hpp"
#include "byte_order.hpp"
#include "hnsynth/errors.hpp"
#include "hnsynth/io.hpp"

namespace hnsynth {

using detail::get_f32_le;
using detail::get_le;
using detail::put_f32_le;
using detail::put_le;

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) throw FileNotFound(path.string());
    throw IoError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path, WavInfo* info) {
  const std::vector<unsigned char> bytes = read_all(path);
  const unsigned char* p = bytes.data();
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw MalformedHeader("not a RIFF/WAVE file: " + path.string());
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = p + pos;
    const auto size = get_le<std::uint32_t>(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw MalformedHeader("short fmt chunk");
      format = get_le<std::uint16_t>(p + body);
      channels = get_le<std::uint16_t>(p + body + 2);
      sample_rate = get_le<std::uint32_t>(p + body + 4);
      block_align = get_le<std::uint16_t>(p + body + 12);
      bits = get_le<std::uint16_t>(p + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw MalformedHeader("short extensible fmt chunk");
        format = get_le<std::uint16_t>(p + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw MalformedHeader("data chunk precedes fmt chunk");
      data = p + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
      if (data_size < size) throw TruncatedFile("data chunk shorter than declared: " + path.string());
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw MalformedHeader("missing fmt chunk");
  if (!data) throw MalformedHeader("missing data chunk");
  if (sample_rate == 0) throw MalformedHeader("zero sample rate");
  if (channels != 1 && channels != 2) throw UnsupportedCodec("only mono or stereo files are supported");

  SampleFormat sf;
  std::size_t width;
  if (format == kFormatPcm && bits == 16) {
    sf = SampleFormat::Pcm16;
    width = 2;
  } else if (format == kFormatFloat && bits == 32) {
    sf = SampleFormat::Float32;
    width = 4;
  } else {
    throw UnsupportedCodec("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                           std::to_string(bits) + " bits)");
  }
  if (block_align != width * channels) throw MalformedHeader("inconsistent block alignment");

  const std::size_t frames = data_size / block_align;
  std::vector<double> samples(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + i * block_align + c * width;
      acc += sf == SampleFormat::Pcm16 ? get_le<std::int16_t>(s) / 32768.0 : static_cast<double>(get_f32_le(s));
    }
    samples[i] = acc / channels;
  }
  if (info) *info = {channels, sf, channels == 2};
  Waveform w(std::move(samples), static_cast<int>(sample_rate));
  w.validate();
  return w;
}

std::size_t write_wav(const Waveform& x, const std::filesystem::path& path, SampleFormat format) {
  x.validate();
  const std::size_t width = format == SampleFormat::Pcm16 ? 2 : 4;
  const auto data_size = static_cast<std::uint32_t>(x.size() * width);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_le<std::uint32_t>(out, 36 + data_size);
  out += "WAVEfmt ";
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, format == SampleFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(x.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(x.sample_rate * width));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(width));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(width * 8));
  out += "data";
  put_le<std::uint32_t>(out, data_size);

  std::size_t clipped = 0;
  for (double v : x.samples) {
    if (v > 1.0 || v < -1.0) {
      ++clipped;
      v = std::clamp(v, -1.0, 1.0);
    }
    if (format == SampleFormat::Pcm16) {
      const double q = std::clamp(std::nearbyint(v * 32768.0), -32768.0, 32767.0);
      put_le<std::int16_t>(out, static_cast<std::int16_t>(q));
    } else {
      put_f32_le(out, static_cast<float>(v));
    }
  }
  detail::write_file_atomic(path, out);
  return clipped;
}

}  // namespace hnsynth
