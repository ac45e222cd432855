#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "seqsleep/dataio.hpp"
#include "seqsleep/errors.hpp"
#include "test_util.hpp"

using namespace seqsleep;
namespace fs = std::filesystem;

namespace {

Recording make_recording(std::size_t n_epochs) {
  Recording r;
  r.subject_id = "T01";
  r.channel_name = "Fpz-Cz";
  r.samples.resize(n_epochs * kEpochSamples);
  for (std::size_t i = 0; i < r.samples.size(); ++i) r.samples[i] = std::sin(0.01f * static_cast<float>(i)) * 40.0f;
  for (std::size_t e = 0; e < n_epochs; ++e) r.epoch_labels.push_back(static_cast<StageLabel>(e % kNumStages));
  r.lights_off_idx = 0;
  r.lights_on_idx = r.samples.size();
  return r;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

// Magnitude of a single DFT bin, computed directly.
double dft_mag(const std::vector<float>& x, std::size_t k) {
  std::complex<double> acc = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += static_cast<double>(x[i]) * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
  }
  return std::abs(acc);
}

}  // namespace

TEST_CASE("recording round trip") {
  testutil::TempDir dir;
  const auto rec = make_recording(100);
  CHECK(rec.samples.size() == 300000);
  save_recording(rec, dir.path / "a.rec");
  const auto back = load_recording(dir.path / "a.rec");
  CHECK(back.subject_id == rec.subject_id);
  CHECK(back.channel_name == rec.channel_name);
  CHECK(back.epoch_labels == rec.epoch_labels);
  CHECK(back.lights_on_idx == rec.lights_on_idx);
  REQUIRE(back.samples.size() == rec.samples.size());
  CHECK(std::memcmp(back.samples.data(), rec.samples.data(), rec.samples.size() * sizeof(float)) == 0);
}

TEST_CASE("truncated sample block is rejected") {
  testutil::TempDir dir;
  save_recording(make_recording(3), dir.path / "a.rec");
  const auto p = dir.path / "a.rec";
  fs::resize_file(p, fs::file_size(p) - 4);
  CHECK(kind_of([&] { load_recording(p); }) == ErrorKind::SampleCountMismatch);
}

TEST_CASE("header errors name the field") {
  testutil::TempDir dir;
  auto write = [&](const std::string& header) {
    std::ofstream f(dir.path / "h.rec", std::ios::binary);
    f << header << '\n';
    std::vector<float> z(kEpochSamples, 0.0f);
    f.write(reinterpret_cast<const char*>(z.data()), static_cast<std::streamsize>(z.size() * sizeof(float)));
  };
  const std::string base = "subject_id: X\nchannel: C\nsample_rate: 100\nn_epochs: 1\nlights_off: 0\nlights_on: 3000\n";
  write(base + "label_codes: 7\n");
  CHECK(kind_of([&] { load_recording(dir.path / "h.rec"); }) == ErrorKind::UnknownLabelCode);
  write(base + "label_codes: 1\n");
  CHECK(load_recording(dir.path / "h.rec").epoch_labels.front() == StageLabel::N1);
  write("subject_id: X\nchannel: C\nsample_rate: 100\nlights_off: 0\nlights_on: 3000\nlabel_codes: 1\n");
  try {
    load_recording(dir.path / "h.rec");
    FAIL("expected MalformedHeader");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedHeader);
    CHECK(std::string(e.what()).find("n_epochs") != std::string::npos);
  }
}

TEST_CASE("cohort directory round trip") {
  testutil::TempDir dir;
  std::vector<Recording> recs{make_recording(2), make_recording(3)};
  recs[1].subject_id = "T02";
  save_cohort(recs, dir.path);
  const auto manifest = read_manifest(dir.path);
  REQUIRE(manifest.size() == 2);
  CHECK(manifest[1].subject_id == "T02");
  const auto back = load_cohort(dir.path);
  CHECK(back[1].n_epochs() == 3);
}

TEST_CASE("stage label mapping") {
  using R = RawLabel;
  using S = StageLabel;
  const std::vector<R> raw{R::W, R::N4, R::MOVEMENT, R::REM};
  const auto m = map_stage_labels(raw);
  CHECK(m.labels == std::vector<S>{S::W, S::N3, S::REM});
  CHECK(m.kept == std::vector<bool>{true, true, false, true});

  CHECK(map_stage_labels(std::vector<R>(4, R::UNKNOWN)).labels.empty());

  const std::vector<R> aasm{R::W, R::N1, R::N2, R::N3, R::REM};
  const auto same = map_stage_labels(aasm);
  CHECK(same.labels == std::vector<S>{S::W, S::N1, S::N2, S::N3, S::REM});
  CHECK(same.kept == std::vector<bool>(5, true));
}

TEST_CASE("in-bed trimming") {
  auto rec = make_recording(30);
  const auto whole = trim_in_bed(rec);
  CHECK(whole.samples == rec.samples);
  CHECK(whole.epoch_labels == rec.epoch_labels);

  rec.lights_off_idx = 10 * kEpochSamples;
  rec.lights_on_idx = 20 * kEpochSamples;
  const auto mid = trim_in_bed(rec);
  CHECK(mid.n_epochs() == 10);
  CHECK(mid.samples.size() == 30000);
  CHECK(mid.samples.front() == rec.samples[10 * kEpochSamples]);
  CHECK(mid.epoch_labels.front() == rec.epoch_labels[10]);

  rec.lights_off_idx = 1500;
  CHECK(kind_of([&] { trim_in_bed(rec); }) == ErrorKind::MisalignedLightsIndex);
}

TEST_CASE("20 s epochs gain 5 s of context on each side") {
  std::vector<float> samples(5 * 2000);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = static_cast<float>(i);
  const std::vector<StageLabel> labels{StageLabel::W, StageLabel::N2, StageLabel::N3, StageLabel::REM, StageLabel::N1};
  const auto out = expand_epochs_20_to_30(samples, labels);
  // First and last epochs lack context.
  CHECK(out.dropped == 2);
  REQUIRE(out.recording.n_epochs() == 3);
  CHECK(out.recording.epoch_labels == std::vector<StageLabel>{StageLabel::N2, StageLabel::N3, StageLabel::REM});
  // The epoch starting at 2000 spans [1500, 4500).
  const auto e = out.recording.epoch(0);
  CHECK(e.front() == 1500.0f);
  CHECK(e.back() == 4499.0f);
}

TEST_CASE("resampling to 100 Hz") {
  SUBCASE("identity at 100 Hz") {
    std::vector<float> x(1234);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(0.37f * static_cast<float>(i)) + 1e-7f * i;
    const auto y = resample_to_100hz(x, 100);
    CHECK(std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0);
  }
  SUBCASE("10 Hz tone from 256 Hz keeps its frequency") {
    std::vector<float> x(2560);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 10.0 * i / 256.0);
    const auto y = resample_to_100hz(x, 256);
    REQUIRE(y.size() == 1000);
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 0; k <= 500; ++k) {
      const double m = dft_mag(y, k);
      if (m > best_mag) best_mag = m, best = k;
    }
    // 1000 samples at 100 Hz: 0.1 Hz per bin.
    CHECK(best == 100);
  }
  SUBCASE("tone above the cutoff is removed") {
    std::vector<float> x(2000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 70.0 * i / 200.0);
    const auto y = resample_to_100hz(x, 200);
    double rms = 0.0;
    for (std::size_t i = 100; i + 100 < y.size(); ++i) rms += y[i] * y[i];
    rms = std::sqrt(rms / static_cast<double>(y.size() - 200));
    CHECK(rms < 0.05);
  }
  SUBCASE("constant stays constant") {
    for (int rate : {128, 200, 250, 256, 512}) {
      std::vector<float> x(static_cast<std::size_t>(rate) * 5, 3.25f);
      for (float v : resample_to_100hz(x, rate)) CHECK(std::abs(v - 3.25f) <= 3.25f * 1e-6f);
    }
  }
  SUBCASE("unsupported rates") {
    std::vector<float> x(100, 0.0f);
    CHECK(kind_of([&] { resample_to_100hz(x, 50); }) == ErrorKind::UnsupportedRate);
    CHECK(kind_of([&] { resample_to_100hz(x, 100003); }) == ErrorKind::UnsupportedRate);
  }
}
