#include "seqsleep/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "seqsleep/errors.hpp"

namespace seqsleep {

namespace {

// FFTW's planner is not thread-safe but executing a plan is. FFTW_ESTIMATE
// keeps plan choice independent of timing, so results repeat run to run.
fftw_plan plan_for(std::size_t n, bool inverse) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, bool>, fftw_plan> plans;
  std::lock_guard lock(mu);
  auto& p = plans[{n, inverse}];
  if (!p) {
    auto* buf = fftw_alloc_complex(n);
    p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                         FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
  }
  return p;
}

}  // namespace

void fft_inplace(std::span<std::complex<double>> data, bool inverse) {
  if (data.empty()) throw Error(ErrorKind::InvalidArgument, "fft of an empty buffer");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(data.size(), inverse), buf, buf);
}

}  // namespace seqsleep
