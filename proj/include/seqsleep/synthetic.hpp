#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "seqsleep/dataio.hpp"

namespace seqsleep {

struct FrequencyBand {
  double lo_hz;
  double hi_hz;
};

// Band-power statistics for one sleep stage, one entry per band.
struct StageProfile {
  std::vector<double> mean;
  std::vector<double> sd;
};

// Channel mismatch between a source and target cohort. Band powers are first
// mixed (target = mixing * source), then the spectrum is stretched along the
// frequency axis (power at f moves to warp * f), then a flat noise floor
// (power per Hz) is added. The default value is the identity shift.
struct DomainShift {
  double frequency_warp = 1.0;
  std::vector<std::vector<double>> band_mixing;  // empty means identity
  double noise_floor = 0.0;

  bool is_identity() const;
  // (1 - strength) * I + strength * C, where C moves each band's power to the next band.
  static std::vector<std::vector<double>> cyclic_mixing(std::size_t n_bands, double strength);
};

struct SyntheticCohortConfig {
  std::size_t n_subjects = 5;
  std::size_t epochs_per_subject = 200;
  std::vector<FrequencyBand> bands;
  std::array<StageProfile, kNumStages> profiles;
  DomainShift mismatch;
  double self_transition = 0.85;
  double subject_gain_sd = 0.1;  // lognormal spread of per-subject amplitude
  double background = 0.05;      // flat density (power/Hz) under the bands, 0 to 50 Hz
  std::uint64_t rng_seed = 1;
  std::string subject_prefix = "S";
  std::string channel_name = "synthetic";

  void validate() const;
};

// Five bands from delta to beta with moderately overlapping stage profiles.
SyntheticCohortConfig default_cohort_config();
// Well-spread stage spectra with small variances; near-perfectly separable.
SyntheticCohortConfig separable_cohort_config();

// Expected power spectral density (per Hz) of a stage after the domain shift.
double stage_density(const SyntheticCohortConfig& cfg, const std::vector<double>& band_powers,
                     double freq_hz);

std::vector<Recording> generate_synthetic_cohort(const SyntheticCohortConfig& cfg);

}  // namespace seqsleep
