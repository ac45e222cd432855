#pragma once

#include <cstdint>
#include <string>

#include "seqsleep/network.hpp"
#include "seqsleep/training.hpp"

namespace seqsleep::cli {

struct RunConfig {
  HyperParams hp;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out;
  std::string log;

  // synth
  std::size_t subjects = 5;
  std::size_t epochs_per_subject = 200;
  std::string profile = "default";
  std::string mismatch = "identity";
  std::string channel = "synthetic";
  std::string prefix = "S";

  // data and checkpoints
  std::string cohort;
  std::string train_dir;
  std::string val_dir;
  std::string init;
  std::string checkpoint;
  std::string regime = "all";
  bool scratch = false;
  std::string hypnogram_dir;

  // spectrogram dump
  std::string recording;
  std::size_t epoch_index = 0;

  // Training-setting overrides when finetuning an existing checkpoint.
  bool dropout_given = false;
  bool lambda_given = false;
  bool seq_len_given = false;
};

int cmd_synth(const RunConfig& cfg);
int cmd_pretrain(const RunConfig& cfg);
int cmd_finetune(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_loso(const RunConfig& cfg);
int cmd_spectrogram(const RunConfig& cfg);

}  // namespace seqsleep::cli
