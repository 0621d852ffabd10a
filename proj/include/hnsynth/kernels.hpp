#pragma once

// Data-parallel inner loops shared by synthesis, spectral analysis and the
// losses. Each kernel has a scalar reference implementation and, where the
// build and the CPU allow it, a vectorized variant. The variant in use is
// picked once per process (see active()); HNSYNTH_ISA=scalar|avx2 in the
// environment overrides the automatic choice.

#include <complex>
#include <span>

namespace hnsynth::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  // out[i] += amp[i] * sin(2*pi*(k * cycles[i] + phase0)), where cycles and
  // phase0 are measured in turns. Only the fractional part of the argument
  // matters, so callers pass cycles already reduced to [0, 1).
  void (*harmonic_accumulate)(std::span<double> out, std::span<const double> amp,
                              std::span<const double> cycles, double k, double phase0);

  // out[i] = a[i] + b[i]
  void (*add)(std::span<const double> a, std::span<const double> b, std::span<double> out);
  // out[i] = a[i] * b[i]
  void (*multiply)(std::span<const double> a, std::span<const double> b, std::span<double> out);
  // out[i] += a[i] * b[i]
  void (*multiply_add)(std::span<const double> a, std::span<const double> b, std::span<double> out);
  // sum_i a[i] * b[i]
  double (*dot)(std::span<const double> a, std::span<const double> b);
  // sum_i |a[i] - b[i]|
  double (*abs_diff_sum)(std::span<const double> a, std::span<const double> b);
  // out[i] = |z[i]|
  void (*magnitude)(std::span<const std::complex<double>> z, std::span<double> out);
};

const KernelTable& scalar();
// nullptr when the build lacks AVX2 support or the CPU does not report AVX2+FMA.
const KernelTable* avx2();
const KernelTable& active();

}  // namespace hnsynth::kernels
