#include "seqsleep/synthetic.hpp"

#include <cmath>
#include <complex>
#include <cstdio>

#include "seqsleep/errors.hpp"
#include "seqsleep/fft.hpp"
#include "seqsleep/rng.hpp"

namespace seqsleep {
namespace {

constexpr std::size_t kSynthFft = 4096;

std::vector<FrequencyBand> standard_bands() {
  return {{0.5, 4.0}, {4.0, 8.0}, {8.0, 12.0}, {12.0, 16.0}, {16.0, 30.0}};
}

std::vector<double> mix_bands(const DomainShift& shift, const std::vector<double>& powers) {
  if (shift.band_mixing.empty()) return powers;
  std::vector<double> out(powers.size(), 0.0);
  for (std::size_t i = 0; i < powers.size(); ++i) {
    for (std::size_t j = 0; j < powers.size(); ++j) out[i] += shift.band_mixing[i][j] * powers[j];
  }
  return out;
}

}  // namespace

bool DomainShift::is_identity() const {
  if (frequency_warp != 1.0 || noise_floor != 0.0) return false;
  for (std::size_t i = 0; i < band_mixing.size(); ++i) {
    for (std::size_t j = 0; j < band_mixing[i].size(); ++j) {
      if (band_mixing[i][j] != (i == j ? 1.0 : 0.0)) return false;
    }
  }
  return true;
}

std::vector<std::vector<double>> DomainShift::cyclic_mixing(std::size_t n_bands, double strength) {
  std::vector<std::vector<double>> m(n_bands, std::vector<double>(n_bands, 0.0));
  for (std::size_t i = 0; i < n_bands; ++i) {
    m[i][i] += 1.0 - strength;
    m[(i + 1) % n_bands][i] += strength;
  }
  return m;
}

void SyntheticCohortConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (n_subjects == 0) fail("n_subjects must be >= 1");
  if (epochs_per_subject == 0) fail("epochs_per_subject must be > 0");
  if (bands.empty()) fail("at least one frequency band is required");
  for (const auto& b : bands) {
    if (!(b.lo_hz >= 0.0 && b.lo_hz < b.hi_hz)) fail("band edges must satisfy 0 <= lo < hi");
    if (b.hi_hz * mismatch.frequency_warp > 50.0) fail("warped band exceeds the 50 Hz Nyquist limit");
  }
  for (const auto& p : profiles) {
    if (p.mean.size() != bands.size() || p.sd.size() != bands.size()) {
      fail("stage profile size does not match band count");
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
      if (!(p.mean[b] > 0.0)) fail("band powers must be > 0");
      if (p.sd[b] < 0.0) fail("band power sd must be >= 0");
    }
  }
  if (!(mismatch.frequency_warp > 0.0)) fail("frequency warp must be > 0");
  if (mismatch.noise_floor < 0.0) fail("noise floor must be >= 0");
  if (background < 0.0) fail("background density must be >= 0");
  if (!mismatch.band_mixing.empty()) {
    if (mismatch.band_mixing.size() != bands.size()) fail("band mixing matrix has wrong size");
    for (const auto& row : mismatch.band_mixing) {
      if (row.size() != bands.size()) fail("band mixing matrix has wrong size");
      for (double v : row) {
        if (v < 0.0) fail("band mixing entries must be nonnegative");
      }
    }
  }
  if (!(self_transition >= 0.0 && self_transition <= 1.0)) fail("self_transition must be in [0,1]");
}

SyntheticCohortConfig default_cohort_config() {
  SyntheticCohortConfig cfg;
  cfg.bands = standard_bands();
  //                 delta theta alpha sigma beta
  const double means[kNumStages][5] = {
      {10.0, 6.0, 14.0, 4.0, 8.0},   // W
      {14.0, 12.0, 5.0, 3.0, 4.0},   // N1
      {24.0, 10.0, 4.0, 9.0, 3.0},   // N2
      {60.0, 12.0, 3.0, 3.0, 2.0},   // N3
      {14.0, 11.0, 5.0, 2.0, 5.0},   // REM
  };
  for (std::size_t s = 0; s < kNumStages; ++s) {
    cfg.profiles[s].mean.assign(means[s], means[s] + 5);
    for (double m : cfg.profiles[s].mean) cfg.profiles[s].sd.push_back(0.35 * m);
  }
  return cfg;
}

SyntheticCohortConfig separable_cohort_config() {
  SyntheticCohortConfig cfg;
  cfg.bands = standard_bands();
  const double means[kNumStages][5] = {
      {5.0, 5.0, 40.0, 5.0, 20.0},
      {10.0, 30.0, 5.0, 5.0, 5.0},
      {20.0, 8.0, 5.0, 30.0, 5.0},
      {80.0, 8.0, 3.0, 3.0, 2.0},
      {8.0, 12.0, 5.0, 3.0, 25.0},
  };
  for (std::size_t s = 0; s < kNumStages; ++s) {
    cfg.profiles[s].mean.assign(means[s], means[s] + 5);
    for (double m : cfg.profiles[s].mean) cfg.profiles[s].sd.push_back(0.15 * m);
  }
  cfg.subject_gain_sd = 0.05;
  return cfg;
}

double stage_density(const SyntheticCohortConfig& cfg, const std::vector<double>& band_powers,
                     double freq_hz) {
  const double source_f = freq_hz / cfg.mismatch.frequency_warp;
  double d = cfg.background + cfg.mismatch.noise_floor;
  for (std::size_t b = 0; b < cfg.bands.size(); ++b) {
    const auto& band = cfg.bands[b];
    if (source_f >= band.lo_hz && source_f < band.hi_hz) {
      // Stretching by the warp spreads the band's power over a wider span.
      d += band_powers[b] / ((band.hi_hz - band.lo_hz) * cfg.mismatch.frequency_warp);
    }
  }
  return d;
}

std::vector<Recording> generate_synthetic_cohort(const SyntheticCohortConfig& cfg) {
  cfg.validate();
  const double df = static_cast<double>(kSampleRate) / static_cast<double>(kSynthFft);
  const auto n = static_cast<double>(kSynthFft);

  std::vector<Recording> cohort;
  cohort.reserve(cfg.n_subjects);
  for (std::size_t subj = 0; subj < cfg.n_subjects; ++subj) {
    Rng rng(derive_seed(cfg.rng_seed, "synthetic.subject", subj));
    Recording rec;
    char id[32];
    std::snprintf(id, sizeof id, "%s%02zu", cfg.subject_prefix.c_str(), subj + 1);
    rec.subject_id = id;
    rec.channel_name = cfg.channel_name;
    rec.sample_rate = kSampleRate;
    rec.samples.reserve(cfg.epochs_per_subject * kEpochSamples);

    const double gain_sigma = std::sqrt(std::log1p(cfg.subject_gain_sd * cfg.subject_gain_sd));
    const double subject_gain = std::exp(gain_sigma * rng.normal() - 0.5 * gain_sigma * gain_sigma);

    const double off_diag = (1.0 - cfg.self_transition) / static_cast<double>(kNumStages - 1);
    auto stage = static_cast<std::size_t>(rng.below(kNumStages));
    std::vector<std::complex<double>> spec(kSynthFft);
    for (std::size_t e = 0; e < cfg.epochs_per_subject; ++e) {
      if (e > 0) {
        const double u = rng.uniform();
        if (u >= cfg.self_transition) {
          auto k = static_cast<std::size_t>((u - cfg.self_transition) / off_diag);
          if (k >= kNumStages - 1) k = kNumStages - 2;
          stage = k >= stage ? k + 1 : k;
        }
      }
      rec.epoch_labels.push_back(static_cast<StageLabel>(stage));

      // Per-epoch band powers: lognormal with the profile's mean and sd.
      const auto& prof = cfg.profiles[stage];
      std::vector<double> powers(cfg.bands.size());
      for (std::size_t b = 0; b < powers.size(); ++b) {
        const double cv = prof.sd[b] / prof.mean[b];
        const double sigma = std::sqrt(std::log1p(cv * cv));
        powers[b] = subject_gain * prof.mean[b] * std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
      }
      powers = mix_bands(cfg.mismatch, powers);

      // Complex Gaussian spectrum with E|X_k|^2 = N^2 D(f_k) df / 2, so that
      // the signal variance equals the integrated density.
      spec[0] = 0.0;
      spec[kSynthFft / 2] = 0.0;
      for (std::size_t k = 1; k < kSynthFft / 2; ++k) {
        const double dens = stage_density(cfg, powers, static_cast<double>(k) * df);
        const double amp = n * std::sqrt(dens * df / 2.0) / std::sqrt(2.0);
        const std::complex<double> x(amp * rng.normal(), amp * rng.normal());
        spec[k] = x;
        spec[kSynthFft - k] = std::conj(x);
      }
      fft_inplace(spec, /*inverse=*/true);
      for (std::size_t i = 0; i < kEpochSamples; ++i) {
        rec.samples.push_back(static_cast<float>(spec[i].real() / n));
      }
    }
    rec.lights_off_idx = 0;
    rec.lights_on_idx = rec.samples.size();
    cohort.push_back(std::move(rec));
  }
  return cohort;
}

}  // namespace seqsleep
