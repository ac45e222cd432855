#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "seqsleep/metrics.hpp"
#include "seqsleep/training.hpp"

namespace seqsleep {

std::uint64_t EvalReport::total() const {
  std::uint64_t n = 0;
  for (const auto& row : confusion) {
    for (auto c : row) n += c;
  }
  return n;
}

Probabilities multiplicative_fuse(std::span<const Probabilities> decisions) {
  if (decisions.empty()) throw Error(ErrorKind::EmptyDecisionSet, "no decisions to fuse");
  std::array<double, kNumStages> logp{};
  for (const auto& d : decisions) {
    for (std::size_t c = 0; c < kNumStages; ++c) logp[c] += std::log(std::max(d[c], kFusionClamp));
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  Probabilities out{};
  double s = 0.0;
  for (std::size_t c = 0; c < kNumStages; ++c) {
    out[c] = std::exp(logp[c] - mx);
    s += out[c];
  }
  for (auto& v : out) v /= s;
  return out;
}

int argmax(const Probabilities& p) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(kNumStages); ++c) {
    if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

SlidingResult sliding_infer(const ModelParams& params, const PreparedRecording& rec, std::size_t seq_len,
                            std::size_t window_batch) {
  const auto windows = make_sequences(rec, seq_len);
  const std::size_t n_epochs = rec.n_epochs();
  const auto features = arnn_features(params, rec.images);
  const std::size_t width = features.cols();

  SlidingResult out;
  out.decisions.assign(n_epochs, {});
  for (std::size_t w0 = 0; w0 < windows.size(); w0 += window_batch) {
    const std::size_t b = std::min(window_batch, windows.size() - w0);
    Tensor<float> x = Tensor<float>::matrix(seq_len * b, width);
    for (std::size_t j = 0; j < b; ++j) {
      for (std::size_t i = 0; i < seq_len; ++i) {
        const std::size_t epoch = windows[w0 + j].start + i;
        std::copy_n(features.data() + epoch * width, width, x.data() + (i * b + j) * width);
      }
    }
    const auto probs = window_probabilities(params, x, seq_len, b);
    for (std::size_t j = 0; j < b; ++j) {
      for (std::size_t i = 0; i < seq_len; ++i) {
        Probabilities p{};
        for (std::size_t c = 0; c < kNumStages; ++c) p[c] = probs(i * b + j, c);
        out.decisions[windows[w0 + j].start + i].push_back(p);
      }
    }
  }
  out.fused.reserve(n_epochs);
  out.predicted.reserve(n_epochs);
  for (const auto& d : out.decisions) {
    out.fused.push_back(multiplicative_fuse(d));
    out.predicted.push_back(static_cast<StageLabel>(argmax(out.fused.back())));
  }
  return out;
}

Confusion confusion_matrix(std::span<const StageLabel> reference, std::span<const StageLabel> predicted) {
  if (reference.size() != predicted.size()) {
    throw Error(ErrorKind::ShapeMismatch, "reference and prediction lengths differ");
  }
  Confusion c{};
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ++c[static_cast<std::size_t>(stage_index(reference[i]))][static_cast<std::size_t>(stage_index(predicted[i]))];
  }
  return c;
}

void accumulate(Confusion& into, const Confusion& add) {
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) into[i][j] += add[i][j];
  }
}

EvalReport compute_metrics(const Confusion& confusion) {
  EvalReport r;
  r.confusion = confusion;
  const auto total = static_cast<double>(r.total());
  if (total <= 0.0) throw Error(ErrorKind::EmptyConfusion, "confusion matrix has no counts");

  std::array<double, kNumStages> row{}, col{};
  double diag = 0.0;
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) {
      const auto v = static_cast<double>(confusion[i][j]);
      row[i] += v;
      col[j] += v;
    }
    diag += static_cast<double>(confusion[i][i]);
  }
  r.accuracy = diag / total;
  double pe = 0.0;
  for (std::size_t k = 0; k < kNumStages; ++k) pe += (row[k] / total) * (col[k] / total);
  r.kappa = pe < 1.0 ? (r.accuracy - pe) / (1.0 - pe) : 1.0;

  double sens = 0.0, spec = 0.0, f1sum = 0.0;
  for (std::size_t k = 0; k < kNumStages; ++k) {
    const double tp = static_cast<double>(confusion[k][k]);
    const double fn = row[k] - tp;
    const double fp = col[k] - tp;
    const double tn = total - tp - fn - fp;
    const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    const double tnr = tn + fp > 0.0 ? tn / (tn + fp) : 0.0;
    r.f1[k] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    sens += recall;
    spec += tnr;
    f1sum += r.f1[k];
  }
  r.sensitivity = sens / kNumStages;
  r.specificity = spec / kNumStages;
  r.mf1 = f1sum / kNumStages;
  return r;
}

Confusion evaluate_confusion(const ModelParams& params, std::span<const PreparedRecording> recordings,
                             std::size_t seq_len) {
  Confusion total{};
  for (const auto& rec : recordings) {
    const auto res = sliding_infer(params, rec, seq_len);
    accumulate(total, confusion_matrix(rec.labels, res.predicted));
  }
  return total;
}

double fused_accuracy(const ModelParams& params, std::span<const PreparedRecording> recordings,
                      std::size_t seq_len) {
  return compute_metrics(evaluate_confusion(params, recordings, seq_len)).accuracy;
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace

void write_report_text(std::ostream& out, const EvalReport& report) {
  out << "epochs: " << report.total() << '\n'
      << "accuracy: " << fmt(report.accuracy) << '\n'
      << "kappa: " << fmt(report.kappa) << '\n'
      << "mf1: " << fmt(report.mf1) << '\n'
      << "sensitivity: " << fmt(report.sensitivity) << '\n'
      << "specificity: " << fmt(report.specificity) << '\n';
  for (std::size_t k = 0; k < kNumStages; ++k) {
    out << "f1." << stage_name(static_cast<StageLabel>(k)) << ": " << fmt(report.f1[k]) << '\n';
  }
  out << "confusion (rows=reference W,N1,N2,N3,REM; columns=prediction):\n";
  for (const auto& row : report.confusion) {
    for (std::size_t j = 0; j < kNumStages; ++j) out << (j ? "\t" : "") << row[j];
    out << '\n';
  }
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["epochs"] = report.total();
  j["accuracy"] = report.accuracy;
  j["kappa"] = report.kappa;
  j["mf1"] = report.mf1;
  j["sensitivity"] = report.sensitivity;
  j["specificity"] = report.specificity;
  j["f1"] = report.f1;
  j["confusion"] = report.confusion;
  return j.dump(2);
}

void write_hypnogram(std::ostream& out, std::span<const StageLabel> labels) {
  for (auto l : labels) out << stage_index(l) << '\n';
}

}  // namespace seqsleep
