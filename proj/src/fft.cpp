#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

#include "hnsynth/errors.hpp"

namespace hnsynth::detail {

namespace {
// The FFTW planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
}  // namespace

struct RealFft::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

RealFft::RealFft(std::size_t size) : size_(size), plans_(std::make_unique<Plans>()) {
  if (size < 2 || (size & (size - 1)) != 0) throw InvalidArgument("FFT size must be a power of two >= 2");
  const int n = static_cast<int>(size);
  RealBuffer real(fftw_alloc_real(size));
  ComplexBuffer cplx(fftw_alloc_complex(bins()));
  std::lock_guard lock(planner_mutex());
  // FFTW_ESTIMATE keeps plan selection, and therefore the rounding, reproducible run to run.
  plans_->r2c = fftw_plan_dft_r2c_1d(n, real.get(), cplx.get(), FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r_1d(n, cplx.get(), real.get(), FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->r2c);
  fftw_destroy_plan(plans_->c2r);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  RealBuffer real(fftw_alloc_real(size_));
  ComplexBuffer cplx(fftw_alloc_complex(bins()));
  std::copy(in.begin(), in.end(), real.get());
  fftw_execute_dft_r2c(plans_->r2c, real.get(), cplx.get());
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {cplx[k][0], cplx[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  RealBuffer real(fftw_alloc_real(size_));
  ComplexBuffer cplx(fftw_alloc_complex(bins()));
  for (std::size_t k = 0; k < bins(); ++k) {
    cplx[k][0] = in[k].real();
    cplx[k][1] = in[k].imag();
  }
  // c2r destroys its input; cplx is scratch.
  fftw_execute_dft_c2r(plans_->c2r, cplx.get(), real.get());
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = real[i] * scale;
}

const RealFft& RealFft::get(std::size_t size) {
  static std::mutex cache_mutex;
  static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[size];
  if (!slot) slot = std::make_unique<RealFft>(size);
  return *slot;
}

}  // namespace hnsynth::detail
