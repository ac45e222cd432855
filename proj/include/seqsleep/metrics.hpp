#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "seqsleep/dataio.hpp"
#include "seqsleep/network.hpp"

namespace seqsleep {

struct PreparedRecording;

using Probabilities = std::array<double, kNumStages>;
using Confusion = std::array<std::array<std::uint64_t, kNumStages>, kNumStages>;  // [reference][prediction]

struct EvalReport {
  Confusion confusion{};
  double accuracy = 0.0;
  double kappa = 0.0;
  double mf1 = 0.0;
  double sensitivity = 0.0;  // macro-averaged recall
  double specificity = 0.0;  // macro-averaged one-vs-rest true-negative rate
  std::array<double, kNumStages> f1{};

  std::uint64_t total() const;
};

inline constexpr double kFusionClamp = 1e-12;

// Normalized product of the decisions, computed as a sum of logs with each
// probability clamped to >= 1e-12.
Probabilities multiplicative_fuse(std::span<const Probabilities> decisions);

// Index of the largest entry; ties go to the lower class.
int argmax(const Probabilities& p);

// Per-epoch decision sets of a recording: for each epoch, the outputs of
// every stride-1 window that covers it, ordered by window start.
using EpochDecisionSet = std::vector<std::vector<Probabilities>>;

struct SlidingResult {
  EpochDecisionSet decisions;
  std::vector<Probabilities> fused;
  std::vector<StageLabel> predicted;
};

// Evaluates every stride-1 window of `seq_len` epochs, scatters each
// window's outputs to its epochs and fuses them.
SlidingResult sliding_infer(const ModelParams& params, const PreparedRecording& rec,
                            std::size_t seq_len, std::size_t window_batch = 64);

Confusion confusion_matrix(std::span<const StageLabel> reference, std::span<const StageLabel> predicted);
void accumulate(Confusion& into, const Confusion& add);

EvalReport compute_metrics(const Confusion& confusion);

// Fused-inference accuracy pooled over recordings.
double fused_accuracy(const ModelParams& params, std::span<const PreparedRecording> recordings,
                      std::size_t seq_len);

// Fused-inference confusion pooled over recordings.
Confusion evaluate_confusion(const ModelParams& params, std::span<const PreparedRecording> recordings,
                             std::size_t seq_len);

// "key: value" lines followed by the confusion matrix as tab-separated rows.
void write_report_text(std::ostream& out, const EvalReport& report);
// Flat JSON object with the metrics, per-class F1 and the confusion matrix.
std::string report_json(const EvalReport& report);
void write_hypnogram(std::ostream& out, std::span<const StageLabel> labels);

}  // namespace seqsleep
