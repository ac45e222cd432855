#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "seqsleep/freeze_mask.hpp"
#include "seqsleep/metrics.hpp"
#include "seqsleep/training.hpp"

namespace seqsleep {

enum class Regime { DirectTransfer, SoftmaxOnly, SoftmaxPlusARNN, SoftmaxPlusSeqRNN, EntireNetwork };

inline constexpr std::array<Regime, 5> kAllRegimes = {
    Regime::DirectTransfer, Regime::SoftmaxOnly, Regime::SoftmaxPlusARNN,
    Regime::SoftmaxPlusSeqRNN, Regime::EntireNetwork};

// CLI names: direct, softmax, softmax-arnn, softmax-seqrnn, all.
std::string_view regime_name(Regime r);
std::optional<Regime> parse_regime(std::string_view name);

enum class Subnetwork { ARNN, SeqRNN, Softmax };
Subnetwork subnetwork_of(const std::string& group);

// Trainable groups per regime: the softmax layer, plus the ARNN (filterbank,
// eRNN with its output projection, attention) and/or the SeqRNN (with its
// output projection). DirectTransfer trains nothing.
FreezeMask mask_for(Regime regime);

struct TargetSplit {
  std::span<const PreparedRecording> finetune;
  std::span<const PreparedRecording> validation;
  std::span<const PreparedRecording> test;
};

struct RegimeResult {
  ModelParams params;
  EvalReport report;
  std::size_t steps = 0;
  std::optional<FinetuneResult> finetune;  // absent for DirectTransfer
};

// DirectTransfer evaluates the pretrained model as is; the other regimes
// finetune with mask_for(regime) and evaluate the best-on-validation model.
RegimeResult run_regime(Regime regime, const ModelParams& pretrained, const TargetSplit& split,
                        const TrainConfig& cfg, std::ostream* log = nullptr);

}  // namespace seqsleep
