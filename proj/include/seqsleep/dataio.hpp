#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace seqsleep {

inline constexpr int kSampleRate = 100;
inline constexpr std::size_t kEpochSamples = 3000;  // 30 s at 100 Hz
inline constexpr std::size_t kNumStages = 5;

// Class index order is fixed: W=0, N1=1, N2=2, N3=3, REM=4.
enum class StageLabel : std::uint8_t { W = 0, N1 = 1, N2 = 2, N3 = 3, REM = 4 };

// R&K scoring categories as they appear in source annotations.
enum class RawLabel : std::uint8_t { W, N1, N2, N3, N4, REM, MOVEMENT, UNKNOWN };

const char* stage_name(StageLabel s);
inline int stage_index(StageLabel s) { return static_cast<int>(s); }

struct Recording {
  std::string subject_id;
  std::string channel_name;
  int sample_rate = kSampleRate;
  std::vector<float> samples;
  std::vector<StageLabel> epoch_labels;
  std::size_t lights_off_idx = 0;
  std::size_t lights_on_idx = 0;

  std::size_t n_epochs() const { return epoch_labels.size(); }
  std::span<const float> epoch(std::size_t i) const {
    return std::span<const float>(samples).subspan(i * kEpochSamples, kEpochSamples);
  }
};

// Throws Error if any prepared-recording invariant is violated.
void validate(const Recording& rec);

Recording load_recording(const std::filesystem::path& path);
void save_recording(const Recording& rec, const std::filesystem::path& path);

struct CohortEntry {
  std::string filename;
  std::string subject_id;
};

// A cohort directory holds .rec files plus a `manifest` listing
// "<filename> <subject_id>" per line.
std::vector<CohortEntry> read_manifest(const std::filesystem::path& dir);
std::vector<Recording> load_cohort(const std::filesystem::path& dir);
void save_cohort(std::span<const Recording> recordings, const std::filesystem::path& dir);

struct MappedLabels {
  std::vector<StageLabel> labels;
  std::vector<bool> kept;
};

// N4 merges into N3; MOVEMENT and UNKNOWN epochs are dropped.
MappedLabels map_stage_labels(std::span<const RawLabel> raw);

// Restricts to [lights_off_idx, lights_on_idx). Indices must be epoch-aligned.
Recording trim_in_bed(const Recording& rec);

struct ExpandedEpochs {
  Recording recording;
  std::size_t dropped = 0;
};

// Turns 20 s scoring epochs (2000 samples at 100 Hz) into 30 s epochs by adding
// 5 s of context on either side. Epochs without full context are dropped.
ExpandedEpochs expand_epochs_20_to_30(std::span<const float> samples,
                                      std::span<const StageLabel> labels_20s);

struct ResampleOptions {
  double cutoff_hz = 45.0;
  long max_factor = 1000;  // bound on the reduced up/down factors
};

// Rational resampling to 100 Hz through a Hamming-windowed sinc low-pass.
std::vector<float> resample_to_100hz(std::span<const float> samples, int src_rate,
                                     const ResampleOptions& opts = {});

}  // namespace seqsleep
