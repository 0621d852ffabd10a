#include <cmath>
#include <numbers>

#include "hnsynth/kernels.hpp"

namespace hnsynth::kernels {

namespace {

void harmonic_accumulate(std::span<double> out, std::span<const double> amp, std::span<const double> cycles,
                         double k, double phase0) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double t = k * cycles[i] + phase0;
    t -= std::nearbyint(t);
    out[i] += amp[i] * std::sin(two_pi * t);
  }
}

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}

void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
}

void multiply_add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[i] * b[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

void magnitude(std::span<const std::complex<double>> z, std::span<double> out) {
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::sqrt(std::norm(z[i]));
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{
      Isa::Scalar, "scalar", harmonic_accumulate, add, multiply, multiply_add, dot, abs_diff_sum, magnitude,
  };
  return table;
}

}  // namespace hnsynth::kernels
