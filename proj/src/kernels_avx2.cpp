// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the runtime CPU check in kernels_dispatch.cpp.

#include <immintrin.h>

#include <cmath>
#include <numbers>

#include "hnsynth/kernels.hpp"

namespace hnsynth::kernels {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Taylor coefficients; on |y| <= pi/4 the truncation error is below 1e-16.
constexpr double kS3 = -1.0 / 6.0;
constexpr double kS5 = 1.0 / 120.0;
constexpr double kS7 = -1.0 / 5040.0;
constexpr double kS9 = 1.0 / 362880.0;
constexpr double kS11 = -1.0 / 39916800.0;
constexpr double kS13 = 1.0 / 6227020800.0;
constexpr double kS15 = -1.0 / 1307674368000.0;
constexpr double kC2 = -1.0 / 2.0;
constexpr double kC4 = 1.0 / 24.0;
constexpr double kC6 = -1.0 / 720.0;
constexpr double kC8 = 1.0 / 40320.0;
constexpr double kC10 = -1.0 / 3628800.0;
constexpr double kC12 = 1.0 / 479001600.0;
constexpr double kC14 = -1.0 / 87178291200.0;
constexpr double kC16 = 1.0 / 20922789888000.0;

inline __m256d sin_poly(__m256d y) {
  const __m256d y2 = _mm256_mul_pd(y, y);
  __m256d p = _mm256_set1_pd(kS15);
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kS13));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kS11));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kS9));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kS7));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kS5));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kS3));
  p = _mm256_mul_pd(p, y2);
  return _mm256_fmadd_pd(p, y, y);
}

inline __m256d cos_poly(__m256d y) {
  const __m256d y2 = _mm256_mul_pd(y, y);
  __m256d p = _mm256_set1_pd(kC16);
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kC14));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kC12));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kC10));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kC8));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kC6));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kC4));
  p = _mm256_fmadd_pd(p, y2, _mm256_set1_pd(kC2));
  return _mm256_fmadd_pd(p, y2, _mm256_set1_pd(1.0));
}

// sin(2*pi*t) for four turn values. Reduces to the nearest quarter turn and
// evaluates sin or cos on [-pi/4, pi/4].
inline __m256d sin_turns(__m256d t) {
  constexpr int kRound = _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC;
  t = _mm256_sub_pd(t, _mm256_round_pd(t, kRound));
  const __m256d q = _mm256_round_pd(_mm256_mul_pd(t, _mm256_set1_pd(4.0)), kRound);
  const __m256d r = _mm256_fnmadd_pd(q, _mm256_set1_pd(0.25), t);
  const __m256d y = _mm256_mul_pd(r, _mm256_set1_pd(kTwoPi));

  const __m256i qi = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(q));
  const __m256i odd = _mm256_and_si256(qi, _mm256_set1_epi64x(1));
  const __m256d use_cos = _mm256_castsi256_pd(_mm256_cmpeq_epi64(odd, _mm256_set1_epi64x(1)));
  const __m256i sign = _mm256_slli_epi64(_mm256_and_si256(qi, _mm256_set1_epi64x(2)), 62);

  const __m256d v = _mm256_blendv_pd(sin_poly(y), cos_poly(y), use_cos);
  return _mm256_xor_pd(v, _mm256_castsi256_pd(sign));
}

void harmonic_accumulate(std::span<double> out, std::span<const double> amp, std::span<const double> cycles,
                         double k, double phase0) {
  const std::size_t n = out.size();
  const __m256d kv = _mm256_set1_pd(k);
  const __m256d p0 = _mm256_set1_pd(phase0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_fmadd_pd(kv, _mm256_loadu_pd(cycles.data() + i), p0);
    const __m256d s = sin_turns(t);
    const __m256d acc = _mm256_fmadd_pd(_mm256_loadu_pd(amp.data() + i), s, _mm256_loadu_pd(out.data() + i));
    _mm256_storeu_pd(out.data() + i, acc);
  }
  if (i < n) {
    // Pad the tail into a full vector so every sample takes the same path.
    alignas(32) double c[4] = {0, 0, 0, 0};
    alignas(32) double a[4] = {0, 0, 0, 0};
    alignas(32) double o[4] = {0, 0, 0, 0};
    const std::size_t rem = n - i;
    for (std::size_t j = 0; j < rem; ++j) {
      c[j] = cycles[i + j];
      a[j] = amp[i + j];
      o[j] = out[i + j];
    }
    const __m256d t = _mm256_fmadd_pd(kv, _mm256_load_pd(c), p0);
    _mm256_store_pd(o, _mm256_fmadd_pd(_mm256_load_pd(a), sin_turns(t), _mm256_load_pd(o)));
    for (std::size_t j = 0; j < rem; ++j) out[i + j] = o[j];
  }
}

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void multiply_add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d acc =
        _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), _mm256_loadu_pd(out.data() + i));
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (; i < n; ++i) out[i] = std::fma(a[i], b[i], out[i]);
}

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
  }
  double s = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double abs_diff_sum(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_and_pd(d0, abs_mask));
    acc1 = _mm256_add_pd(acc1, _mm256_and_pd(d1, abs_mask));
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc0 = _mm256_add_pd(acc0, _mm256_and_pd(d, abs_mask));
  }
  double s = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

void magnitude(std::span<const std::complex<double>> z, std::span<double> out) {
  const std::size_t n = z.size();
  const double* p = reinterpret_cast<const double*>(z.data());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(p + 2 * i);
    const __m256d b = _mm256_loadu_pd(p + 2 * i + 4);
    // hadd yields |z0|^2 |z2|^2 |z1|^2 |z3|^2; restore order.
    const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
    const __m256d ordered = _mm256_permute4x64_pd(h, 0b11011000);
    _mm256_storeu_pd(out.data() + i, _mm256_sqrt_pd(ordered));
  }
  for (; i < n; ++i) out[i] = std::sqrt(z[i].real() * z[i].real() + z[i].imag() * z[i].imag());
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Isa::Avx2, "avx2", harmonic_accumulate, add, multiply, multiply_add, dot, abs_diff_sum, magnitude,
  };
  return table;
}

}  // namespace hnsynth::kernels
