#include "seqsleep/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "seqsleep/errors.hpp"

namespace seqsleep {
namespace fs = std::filesystem;

const char* stage_name(StageLabel s) {
  switch (s) {
    case StageLabel::W: return "W";
    case StageLabel::N1: return "N1";
    case StageLabel::N2: return "N2";
    case StageLabel::N3: return "N3";
    case StageLabel::REM: return "REM";
  }
  return "?";
}

void validate(const Recording& rec) {
  if (rec.sample_rate != kSampleRate) {
    throw Error(ErrorKind::MalformedHeader,
                "sample_rate must be 100, got " + std::to_string(rec.sample_rate));
  }
  if (rec.samples.size() != kEpochSamples * rec.epoch_labels.size()) {
    throw Error(ErrorKind::SampleCountMismatch,
                "samples: expected " + std::to_string(kEpochSamples * rec.epoch_labels.size()) +
                    " for " + std::to_string(rec.epoch_labels.size()) + " epochs, got " +
                    std::to_string(rec.samples.size()));
  }
  if (!(rec.lights_off_idx < rec.lights_on_idx) || rec.lights_on_idx > rec.samples.size()) {
    throw Error(ErrorKind::MalformedHeader,
                "lights_off/lights_on: need lights_off < lights_on <= " +
                    std::to_string(rec.samples.size()) + ", got " +
                    std::to_string(rec.lights_off_idx) + ", " + std::to_string(rec.lights_on_idx));
  }
  for (auto l : rec.epoch_labels) {
    if (static_cast<int>(l) >= static_cast<int>(kNumStages)) {
      throw Error(ErrorKind::UnknownLabelCode,
                  "label_codes: code " + std::to_string(static_cast<int>(l)));
    }
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class Int>
Int parse_int(const std::string& field, const std::string& text) {
  Int value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorKind::MalformedHeader, field + ": not an integer: '" + text + "'");
  }
  return value;
}

void write_floats_le(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float v : values) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      char b[4] = {char(bits), char(bits >> 8), char(bits >> 16), char(bits >> 24)};
      out.write(b, 4);
    }
  }
}

void read_floats_le(std::istream& in, std::span<float> values) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : values) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
      v = std::bit_cast<float>(bits);
    }
  }
}

}  // namespace

Recording load_recording(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());

  std::map<std::string, std::string> header;
  std::string line;
  bool terminated = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      terminated = true;
      break;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::MalformedHeader, "header line without ':' in " + path.string());
    }
    header[trim(std::string_view(line).substr(0, colon))] =
        trim(std::string_view(line).substr(colon + 1));
  }
  if (!terminated) throw Error(ErrorKind::MalformedHeader, "header not terminated by a blank line");

  auto field = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw Error(ErrorKind::MalformedHeader, key + ": missing");
    return it->second;
  };

  Recording rec;
  rec.subject_id = field("subject_id");
  rec.channel_name = field("channel");
  rec.sample_rate = parse_int<int>("sample_rate", field("sample_rate"));
  const auto n_epochs = parse_int<std::size_t>("n_epochs", field("n_epochs"));
  rec.lights_off_idx = parse_int<std::size_t>("lights_off", field("lights_off"));
  rec.lights_on_idx = parse_int<std::size_t>("lights_on", field("lights_on"));
  if (rec.sample_rate != kSampleRate) {
    throw Error(ErrorKind::MalformedHeader, "sample_rate: must be 100, got " + field("sample_rate"));
  }

  const auto& codes = field("label_codes");
  std::stringstream ss(codes);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto code = parse_int<int>("label_codes", trim(tok));
    if (code < 0 || code >= static_cast<int>(kNumStages)) {
      throw Error(ErrorKind::UnknownLabelCode, "label_codes: code " + std::to_string(code) +
                                                   " at epoch " +
                                                   std::to_string(rec.epoch_labels.size()));
    }
    rec.epoch_labels.push_back(static_cast<StageLabel>(code));
  }
  if (rec.epoch_labels.size() != n_epochs) {
    throw Error(ErrorKind::MalformedHeader,
                "label_codes: " + std::to_string(rec.epoch_labels.size()) +
                    " codes but n_epochs is " + std::to_string(n_epochs));
  }

  const auto body_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto body_bytes = static_cast<std::size_t>(in.tellg() - body_start);
  in.seekg(body_start);
  const auto expected = n_epochs * kEpochSamples;
  if (body_bytes != expected * sizeof(float)) {
    throw Error(ErrorKind::SampleCountMismatch,
                "samples: expected " + std::to_string(expected) + " floats (3000 x n_epochs), file has " +
                    std::to_string(body_bytes) + " bytes");
  }
  rec.samples.resize(expected);
  read_floats_le(in, rec.samples);
  if (!in) throw Error(ErrorKind::IoError, "short read in " + path.string());

  validate(rec);
  return rec;
}

void save_recording(const Recording& rec, const fs::path& path) {
  validate(rec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "subject_id: " << rec.subject_id << '\n'
      << "channel: " << rec.channel_name << '\n'
      << "sample_rate: " << rec.sample_rate << '\n'
      << "n_epochs: " << rec.n_epochs() << '\n'
      << "lights_off: " << rec.lights_off_idx << '\n'
      << "lights_on: " << rec.lights_on_idx << '\n'
      << "label_codes: ";
  for (std::size_t i = 0; i < rec.epoch_labels.size(); ++i) {
    if (i) out << ',';
    out << stage_index(rec.epoch_labels[i]);
  }
  out << "\n\n";
  write_floats_le(out, rec.samples);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::vector<CohortEntry> read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest");
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + (dir / "manifest").string());
  std::vector<CohortEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    CohortEntry e;
    if (!(ls >> e.filename >> e.subject_id)) {
      throw Error(ErrorKind::MalformedHeader, "manifest: bad line '" + line + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<Recording> load_cohort(const fs::path& dir) {
  std::vector<Recording> out;
  for (const auto& e : read_manifest(dir)) {
    out.push_back(load_recording(dir / e.filename));
  }
  return out;
}

void save_cohort(std::span<const Recording> recordings, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream manifest(dir / "manifest", std::ios::trunc);
  if (!manifest) throw Error(ErrorKind::IoError, "cannot write manifest in " + dir.string());
  for (const auto& rec : recordings) {
    const auto name = rec.subject_id + ".rec";
    save_recording(rec, dir / name);
    manifest << name << ' ' << rec.subject_id << '\n';
  }
}

MappedLabels map_stage_labels(std::span<const RawLabel> raw) {
  MappedLabels out;
  out.kept.reserve(raw.size());
  for (auto r : raw) {
    switch (r) {
      case RawLabel::W: out.labels.push_back(StageLabel::W); break;
      case RawLabel::N1: out.labels.push_back(StageLabel::N1); break;
      case RawLabel::N2: out.labels.push_back(StageLabel::N2); break;
      case RawLabel::N3:
      case RawLabel::N4: out.labels.push_back(StageLabel::N3); break;
      case RawLabel::REM: out.labels.push_back(StageLabel::REM); break;
      case RawLabel::MOVEMENT:
      case RawLabel::UNKNOWN: out.kept.push_back(false); continue;
    }
    out.kept.push_back(true);
  }
  return out;
}

Recording trim_in_bed(const Recording& rec) {
  if (rec.lights_off_idx % kEpochSamples != 0 || rec.lights_on_idx % kEpochSamples != 0) {
    throw Error(ErrorKind::MisalignedLightsIndex,
                "lights_off=" + std::to_string(rec.lights_off_idx) +
                    ", lights_on=" + std::to_string(rec.lights_on_idx) +
                    " are not multiples of 3000 samples");
  }
  validate(rec);
  const auto first = rec.lights_off_idx / kEpochSamples;
  const auto last = rec.lights_on_idx / kEpochSamples;
  Recording out;
  out.subject_id = rec.subject_id;
  out.channel_name = rec.channel_name;
  out.sample_rate = rec.sample_rate;
  out.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(rec.lights_off_idx),
                     rec.samples.begin() + static_cast<std::ptrdiff_t>(rec.lights_on_idx));
  out.epoch_labels.assign(rec.epoch_labels.begin() + static_cast<std::ptrdiff_t>(first),
                          rec.epoch_labels.begin() + static_cast<std::ptrdiff_t>(last));
  out.lights_off_idx = 0;
  out.lights_on_idx = out.samples.size();
  return out;
}

ExpandedEpochs expand_epochs_20_to_30(std::span<const float> samples,
                                      std::span<const StageLabel> labels_20s) {
  constexpr std::size_t kShort = 2000;
  constexpr std::size_t kContext = 500;
  ExpandedEpochs out;
  auto& rec = out.recording;
  for (std::size_t k = 0; k < labels_20s.size(); ++k) {
    const auto start = k * kShort;
    if (start < kContext || start + kShort + kContext > samples.size()) {
      ++out.dropped;
      continue;
    }
    const auto first = samples.begin() + static_cast<std::ptrdiff_t>(start - kContext);
    rec.samples.insert(rec.samples.end(), first, first + static_cast<std::ptrdiff_t>(kEpochSamples));
    rec.epoch_labels.push_back(labels_20s[k]);
  }
  rec.lights_off_idx = 0;
  rec.lights_on_idx = rec.samples.size();
  return out;
}

std::vector<float> resample_to_100hz(std::span<const float> samples, int src_rate,
                                     const ResampleOptions& opts) {
  if (src_rate < kSampleRate) {
    throw Error(ErrorKind::UnsupportedRate,
                "src_rate " + std::to_string(src_rate) + " is below 100 Hz");
  }
  if (src_rate == kSampleRate) return {samples.begin(), samples.end()};
  const long g = std::gcd(static_cast<long>(src_rate), static_cast<long>(kSampleRate));
  const long up = kSampleRate / g;
  const long down = src_rate / g;
  if (up > opts.max_factor || down > opts.max_factor) {
    throw Error(ErrorKind::UnsupportedRate, "rational factors " + std::to_string(up) + "/" +
                                                std::to_string(down) + " exceed bound " +
                                                std::to_string(opts.max_factor));
  }

  const double fs = src_rate;
  const double fc = opts.cutoff_hz / fs;  // cycles per input sample
  // Hamming main-lobe width 3.3/N; N ~ 0.66 fs puts the transition near 5 Hz.
  const long half = static_cast<long>(std::ceil(0.33 * fs));
  const auto n_in = static_cast<long>(samples.size());
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(samples.size()) * kSampleRate / fs));

  std::vector<float> out(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    // Input-domain position of output sample m, kept exact as a fraction.
    const long num = static_cast<long>(m) * down;
    const long center = num / up;
    const double frac = static_cast<double>(num % up) / static_cast<double>(up);
    double acc = 0.0;
    double wsum = 0.0;
    for (long k = center - half + 1; k <= center + half; ++k) {
      if (k < 0 || k >= n_in) continue;
      const double tau = static_cast<double>(k - center) - frac;
      if (std::abs(tau) >= static_cast<double>(half)) continue;
      const double arg = 2.0 * fc * tau;
      const double sinc = tau == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double win = 0.54 + 0.46 * std::cos(std::numbers::pi * tau / static_cast<double>(half));
      const double w = sinc * win;
      acc += w * samples[static_cast<std::size_t>(k)];
      wsum += w;
    }
    out[m] = static_cast<float>(acc / wsum);
  }
  return out;
}

}  // namespace seqsleep
