#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqsleep/dataio.hpp"
#include "seqsleep/freeze_mask.hpp"
#include "seqsleep/network.hpp"
#include "seqsleep/spectrogram.hpp"

namespace seqsleep {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t early_stop_patience = 50;  // training steps
  std::size_t eval_every = 10;           // training steps
  std::uint64_t seed = 0;
  double clip_norm = 5.0;                // global gradient norm; <= 0 disables
  std::size_t max_steps = 0;             // 0: no cap beyond `epochs`
  bool class_weighting = false;          // inverse-frequency class weights in the loss

  void validate() const;
};

// A recording turned into network inputs.
struct PreparedRecording {
  std::string id;
  std::vector<EpochImage> images;
  std::vector<StageLabel> labels;

  std::size_t n_epochs() const { return labels.size(); }
};

PreparedRecording prepare_recording(const Recording& rec);
std::vector<PreparedRecording> prepare_cohort(std::span<const Recording> recordings);

// L consecutive epochs of one recording.
struct SequenceSample {
  std::size_t recording = 0;  // index into the cohort
  std::string recording_id;
  std::size_t start = 0;
  std::size_t length = 0;
};

// Every stride-1 window of length L; throws TooShortRecording when the
// recording has fewer than L epochs.
std::vector<SequenceSample> make_sequences(const PreparedRecording& rec, std::size_t seq_len,
                                           std::size_t recording_index = 0);

struct AdamState {
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::uint64_t t = 0;

  static AdamState zeros(const ModelParams& params);
};

// Clips the trainable gradients to a global norm of cfg.clip_norm, then
// applies one bias-corrected Adam update to trainable groups. Frozen groups
// and their moments are not touched. Returns the pre-clip gradient norm.
double adam_step(ModelParams& params, const std::vector<Tensor<float>>& grads, AdamState& state,
                 const TrainConfig& cfg, const std::vector<bool>& trainable);

struct Minibatch {
  Tensor<float> packed;   // (T * L * B) x F
  Tensor<float> targets;  // (L * B) x C, row i*B + b
  std::size_t seq_len = 0;
  std::size_t batch = 0;
};

Minibatch gather_minibatch(std::span<const PreparedRecording> cohort,
                           std::span<const SequenceSample> samples);

struct LossAndGrads {
  double loss = 0.0;
  std::vector<Tensor<float>> grads;  // canonical order; zeros for frozen groups
  Tensor<float> logits;
};

// Forward and backward for one minibatch.
LossAndGrads loss_and_gradients(const ModelParams& params, const Minibatch& batch,
                                const std::vector<bool>& trainable, double dropout_rate,
                                double lambda, Rng* dropout_rng);

struct StepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> val_acc;
};

// Tab-separated: step, epoch, loss, val_acc (empty when not evaluated).
void write_log_line(std::ostream& out, const StepLog& entry);

struct TrainResult {
  ModelParams params;
  std::vector<StepLog> log;
  std::size_t steps = 0;
};

// Minimizes the sequence loss over shuffled minibatches of all stride-1
// sequences, starting from `init`, for cfg.epochs passes.
TrainResult train(const ModelParams& init, std::span<const PreparedRecording> cohort,
                  const TrainConfig& cfg, const std::vector<bool>& trainable = {},
                  std::ostream* log = nullptr);

// Training from a fresh initialization seeded by cfg.seed.
TrainResult pretrain(std::span<const PreparedRecording> cohort, const HyperParams& hp,
                     const TrainConfig& cfg, std::ostream* log = nullptr);

struct Evaluation {
  std::size_t step = 0;
  double val_acc = 0.0;
};

struct FinetuneResult {
  ModelParams best;        // highest validation accuracy, earliest on ties
  ModelParams last;        // parameters when training stopped
  double init_val_acc = 0.0;
  double best_val_acc = 0.0;
  std::size_t best_step = 0;
  std::size_t steps = 0;
  std::vector<Evaluation> evaluations;  // includes step 0
  std::vector<StepLog> log;
};

// Trains the groups the mask leaves trainable, evaluating fused validation
// accuracy every cfg.eval_every steps. Stops once cfg.early_stop_patience
// steps pass without a strictly higher accuracy.
FinetuneResult finetune(const ModelParams& init, const FreezeMask& mask,
                        std::span<const PreparedRecording> train_set,
                        std::span<const PreparedRecording> val_set, const TrainConfig& cfg,
                        std::ostream* log = nullptr);

}  // namespace seqsleep
