#include "seqsleep/transfer.hpp"

namespace seqsleep {

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::DirectTransfer: return "direct";
    case Regime::SoftmaxOnly: return "softmax";
    case Regime::SoftmaxPlusARNN: return "softmax-arnn";
    case Regime::SoftmaxPlusSeqRNN: return "softmax-seqrnn";
    case Regime::EntireNetwork: return "all";
  }
  return "?";
}

std::optional<Regime> parse_regime(std::string_view name) {
  for (auto r : kAllRegimes) {
    if (regime_name(r) == name) return r;
  }
  return std::nullopt;
}

Subnetwork subnetwork_of(const std::string& group) {
  if (group.starts_with("softmax.")) return Subnetwork::Softmax;
  if (group.starts_with("seqrnn.")) return Subnetwork::SeqRNN;
  if (group.starts_with("filterbank.") || group.starts_with("ernn.") || group.starts_with("att.")) {
    return Subnetwork::ARNN;
  }
  throw Error(ErrorKind::InvalidArgument, "parameter group '" + group + "' belongs to no subnetwork");
}

FreezeMask mask_for(Regime regime) {
  FreezeMask mask = FreezeMask::all(false);
  for (const auto& name : mask.names()) {
    const auto sub = subnetwork_of(name);
    bool train = false;
    switch (regime) {
      case Regime::DirectTransfer: train = false; break;
      case Regime::SoftmaxOnly: train = sub == Subnetwork::Softmax; break;
      case Regime::SoftmaxPlusARNN: train = sub != Subnetwork::SeqRNN; break;
      case Regime::SoftmaxPlusSeqRNN: train = sub != Subnetwork::ARNN; break;
      case Regime::EntireNetwork: train = true; break;
    }
    mask.set(name, train);
  }
  return mask;
}

RegimeResult run_regime(Regime regime, const ModelParams& pretrained, const TargetSplit& split,
                        const TrainConfig& cfg, std::ostream* log) {
  RegimeResult out;
  const std::size_t seq_len = pretrained.hyper().seq_len;
  if (regime == Regime::DirectTransfer) {
    out.params = pretrained;
  } else {
    auto ft = finetune(pretrained, mask_for(regime), split.finetune, split.validation, cfg, log);
    out.params = ft.best;
    out.steps = ft.steps;
    out.finetune = std::move(ft);
  }
  out.report = compute_metrics(evaluate_confusion(out.params, split.test, seq_len));
  return out;
}

}  // namespace seqsleep
