#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace seqsleep {

inline constexpr std::size_t kFreqBins = 129;
inline constexpr std::size_t kFrames = 29;
inline constexpr std::size_t kFrameLength = 200;  // 2 s
inline constexpr std::size_t kFrameHop = 100;     // 50% overlap
inline constexpr std::size_t kFftSize = 256;
inline constexpr double kLogFloor = 1e-12;

// Log-power time-frequency image of one 30 s epoch, stored row-major with
// frequency bins as rows and frames as columns.
struct EpochImage {
  std::vector<float> values = std::vector<float>(kFreqBins * kFrames);
  std::size_t source_epoch = 0;

  float at(std::size_t bin, std::size_t frame) const { return values[bin * kFrames + frame]; }
  float& at(std::size_t bin, std::size_t frame) { return values[bin * kFrames + frame]; }
};

// Symmetric Hamming window of length N.
std::vector<double> hamming(std::size_t n);

EpochImage stft_logpower(std::span<const float> epoch, std::size_t source_epoch = 0);

// Images for every epoch of a 100 Hz signal made of consecutive 3000-sample epochs.
std::vector<EpochImage> epoch_images(std::span<const float> samples);

}  // namespace seqsleep
