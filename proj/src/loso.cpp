#include "seqsleep/loso.hpp"

#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "seqsleep/rng.hpp"

namespace seqsleep {

std::size_t validation_count(std::size_t rest) {
  // 4 of every 19 non-test subjects validate.
  const auto v = static_cast<std::size_t>(std::llround(static_cast<double>(rest) * 4.0 / 19.0));
  return std::clamp<std::size_t>(v, 1, rest - 1);
}

std::vector<FoldSplit> loso_splits(std::size_t n_subjects, std::uint64_t seed) {
  if (n_subjects < 3) {
    throw Error(ErrorKind::CohortTooSmall,
                "leave-one-subject-out needs at least 3 subjects, got " + std::to_string(n_subjects));
  }
  std::vector<FoldSplit> folds;
  for (std::size_t test = 0; test < n_subjects; ++test) {
    FoldSplit f;
    f.test = test;
    std::vector<std::size_t> rest;
    for (std::size_t s = 0; s < n_subjects; ++s) {
      if (s != test) rest.push_back(s);
    }
    Rng rng(derive_seed(seed, "loso.split", test));
    rng.shuffle(rest.begin(), rest.end());
    const auto n_val = validation_count(rest.size());
    f.validation.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
    f.finetune.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
    std::sort(f.validation.begin(), f.validation.end());
    std::sort(f.finetune.begin(), f.finetune.end());
    folds.push_back(std::move(f));
  }
  return folds;
}

LosoResult loso_cv(std::span<const PreparedRecording> cohort, const ModelParams& pretrained, Regime regime,
                   const TrainConfig& cfg, const LosoOptions& opts, std::ostream* log) {
  const auto splits = loso_splits(cohort.size(), cfg.seed);
  LosoResult result;
  result.folds.resize(splits.size());
  std::vector<std::string> fold_logs(splits.size());

  auto run_fold = [&](std::size_t k) {
    const auto& split = splits[k];
    std::vector<PreparedRecording> ft, val, test;
    for (auto i : split.finetune) ft.push_back(cohort[i]);
    for (auto i : split.validation) val.push_back(cohort[i]);
    test.push_back(cohort[split.test]);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, "loso.fold", k);
    std::ostringstream fold_log;
    const TargetSplit target{ft, val, test};
    const auto r = opts.scratch_init
                       ? run_regime(Regime::EntireNetwork, *opts.scratch_init, target, fold_cfg, log ? &fold_log : nullptr)
                       : run_regime(regime, pretrained, target, fold_cfg, log ? &fold_log : nullptr);
    result.folds[k] = FoldResult{split, r.report, r.steps};
    fold_logs[k] = fold_log.str();
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, splits.size()));
  if (jobs == 1) {
    for (std::size_t k = 0; k < splits.size(); ++k) run_fold(k);
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr failure;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          std::size_t k;
          {
            std::lock_guard lock(mu);
            if (next >= splits.size() || failure) return;
            k = next++;
          }
          try {
            run_fold(k);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Merge in fold order regardless of completion order.
  Confusion pooled{};
  EvalReport avg;
  for (std::size_t k = 0; k < result.folds.size(); ++k) {
    if (log) *log << "# fold " << k << " test=" << cohort[splits[k].test].id << '\n' << fold_logs[k];
    const auto& r = result.folds[k].report;
    accumulate(pooled, r.confusion);
    avg.accuracy += r.accuracy;
    avg.kappa += r.kappa;
    avg.mf1 += r.mf1;
    avg.sensitivity += r.sensitivity;
    avg.specificity += r.specificity;
    for (std::size_t c = 0; c < kNumStages; ++c) avg.f1[c] += r.f1[c];
  }
  const double n = static_cast<double>(result.folds.size());
  avg.accuracy /= n;
  avg.kappa /= n;
  avg.mf1 /= n;
  avg.sensitivity /= n;
  avg.specificity /= n;
  for (auto& f : avg.f1) f /= n;
  avg.confusion = pooled;
  result.pooled = compute_metrics(pooled);
  result.fold_averaged = avg;
  return result;
}

}  // namespace seqsleep
