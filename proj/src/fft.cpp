#include <mutex>

#include <fftw3.h>

#include "pmgeo/error.hpp"
#include "pmgeo/numerics.hpp"

namespace pmgeo {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

ComplexGrid transform(const ComplexGrid& in, int sign) {
  if (in.size() == 0) throw InvalidInput("fft2: empty grid");
  ComplexGrid out(in.rows(), in.cols());
  ComplexGrid src = in;  // FFTW_ESTIMATE never touches input, but the API wants non-const
  auto* ip = reinterpret_cast<fftw_complex*>(src.data());
  auto* op = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(in.rows()), static_cast<int>(in.cols()), ip, op, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

ComplexGrid fft2(const ComplexGrid& grid) { return transform(grid, FFTW_FORWARD); }

ComplexGrid fft2(const RealGrid& image) {
  if (image.size() == 0) throw InvalidInput("fft2: empty grid");
  return transform(image.cast<std::complex<double>>(), FFTW_FORWARD);
}

ComplexGrid ifft2(const ComplexGrid& spectrum) {
  ComplexGrid out = transform(spectrum, FFTW_BACKWARD);
  out /= static_cast<double>(spectrum.size());
  return out;
}

}  // namespace pmgeo
