#pragma once

#include "seqsleep/synthetic.hpp"
#include "seqsleep/training.hpp"

namespace testutil {

// Small prepared cohort from the separable profile.
inline std::vector<seqsleep::PreparedRecording> small_cohort(std::size_t subjects, std::size_t epochs,
                                                             std::uint64_t seed, double warp = 1.0) {
  auto cfg = seqsleep::separable_cohort_config();
  cfg.n_subjects = subjects;
  cfg.epochs_per_subject = epochs;
  cfg.rng_seed = seed;
  cfg.mismatch.frequency_warp = warp;
  const auto recs = seqsleep::generate_synthetic_cohort(cfg);
  return seqsleep::prepare_cohort(recs);
}

inline seqsleep::HyperParams small_model() {
  seqsleep::HyperParams hp;
  hp.n_filters = 6;
  hp.ernn_hidden = 4;
  hp.attention_size = 4;
  hp.seqrnn_hidden = 4;
  hp.seq_len = 4;
  hp.dropout_rate = 0.1;
  hp.lambda = 1e-3;
  return hp;
}

inline seqsleep::TrainConfig quick_train(std::uint64_t seed = 1) {
  seqsleep::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.lr = 3e-3;
  cfg.eval_every = 5;
  cfg.early_stop_patience = 10;
  cfg.seed = seed;
  return cfg;
}

}  // namespace testutil
