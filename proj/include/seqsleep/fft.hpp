#pragma once

#include <complex>
#include <span>

namespace seqsleep {

// In-place complex DFT (FFTW underneath). The inverse is unscaled.
void fft_inplace(std::span<std::complex<double>> data, bool inverse = false);

}  // namespace seqsleep
