#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace hnsynth::detail {

// Real-input FFT of a fixed power-of-two size backed by FFTW. Plans are
// created once per size and shared; execute() is safe to call concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return size_; }
  std::size_t bins() const noexcept { return size_ / 2 + 1; }

  // in.size() == size(), out.size() == bins()
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  // Normalized inverse: inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

  static const RealFft& get(std::size_t size);

 private:
  struct Plans;
  std::size_t size_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace hnsynth::detail
