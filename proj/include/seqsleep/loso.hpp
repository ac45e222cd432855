#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "seqsleep/metrics.hpp"
#include "seqsleep/transfer.hpp"

namespace seqsleep {

struct FoldSplit {
  std::size_t test = 0;
  std::vector<std::size_t> finetune;
  std::vector<std::size_t> validation;
};

// Number of validation subjects among `rest` non-test subjects: the 15/4
// ratio scaled to the cohort, at least one.
std::size_t validation_count(std::size_t rest);

// Leave-one-subject-out folds; the non-test subjects of each fold are split
// by a seeded shuffle. Throws CohortTooSmall below three subjects.
std::vector<FoldSplit> loso_splits(std::size_t n_subjects, std::uint64_t seed);

struct FoldResult {
  FoldSplit split;
  EvalReport report;
  std::size_t steps = 0;
};

struct LosoResult {
  std::vector<FoldResult> folds;
  EvalReport pooled;          // metrics of the summed confusion matrices
  EvalReport fold_averaged;   // unweighted mean of per-fold metrics (confusion summed)
};

struct LosoOptions {
  std::size_t jobs = 1;
  // When set, every fold starts from this initialization instead of the
  // pretrained checkpoint and trains the entire network (training from
  // scratch on the target cohort).
  const ModelParams* scratch_init = nullptr;
};

LosoResult loso_cv(std::span<const PreparedRecording> cohort, const ModelParams& pretrained, Regime regime,
                   const TrainConfig& cfg, const LosoOptions& opts = {}, std::ostream* log = nullptr);

}  // namespace seqsleep
