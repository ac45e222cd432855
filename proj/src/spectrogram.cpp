#include "seqsleep/spectrogram.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "seqsleep/dataio.hpp"
#include "seqsleep/errors.hpp"
#include "seqsleep/fft.hpp"

namespace seqsleep {

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  }
  return w;
}

EpochImage stft_logpower(std::span<const float> epoch, std::size_t source_epoch) {
  if (epoch.size() != kEpochSamples) {
    throw Error(ErrorKind::WrongEpochLength,
                "expected 3000 samples, got " + std::to_string(epoch.size()));
  }
  static const std::vector<double> window = hamming(kFrameLength);
  EpochImage img;
  img.source_epoch = source_epoch;
  std::vector<std::complex<double>> buf(kFftSize);
  for (std::size_t t = 0; t < kFrames; ++t) {
    const auto start = t * kFrameHop;
    for (std::size_t i = 0; i < kFftSize; ++i) {
      buf[i] = i < kFrameLength ? window[i] * static_cast<double>(epoch[start + i]) : 0.0;
    }
    fft_inplace(buf);
    for (std::size_t k = 0; k < kFreqBins; ++k) {
      img.at(k, t) = static_cast<float>(std::log(std::norm(buf[k]) + kLogFloor));
    }
  }
  return img;
}

std::vector<EpochImage> epoch_images(std::span<const float> samples) {
  if (samples.size() % kEpochSamples != 0) {
    throw Error(ErrorKind::WrongEpochLength,
                "signal length " + std::to_string(samples.size()) + " is not a multiple of 3000");
  }
  std::vector<EpochImage> out;
  out.reserve(samples.size() / kEpochSamples);
  for (std::size_t e = 0; e * kEpochSamples < samples.size(); ++e) {
    out.push_back(stft_logpower(samples.subspan(e * kEpochSamples, kEpochSamples), e));
  }
  return out;
}

}  // namespace seqsleep
