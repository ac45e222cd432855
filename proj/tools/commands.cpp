#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "seqsleep/checkpoint.hpp"
#include "seqsleep/config.hpp"
#include "seqsleep/dataio.hpp"
#include "seqsleep/loso.hpp"
#include "seqsleep/metrics.hpp"
#include "seqsleep/spectrogram.hpp"
#include "seqsleep/synthetic.hpp"
#include "seqsleep/transfer.hpp"

namespace seqsleep::cli {
namespace fs = std::filesystem;

namespace {

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorKind::InvalidArgument, std::string("missing required flag ") + flag);
}

std::vector<PreparedRecording> load_prepared(const std::string& dir) {
  const auto recs = load_cohort(dir);
  if (recs.empty()) throw Error(ErrorKind::InvalidArgument, "cohort " + dir + " is empty");
  return prepare_cohort(recs);
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t = cfg.train;
  t.seed = cfg.seed;
  return t;
}

// Training settings follow the flags when given, otherwise the checkpoint.
ModelParams with_training_overrides(ModelParams params, const RunConfig& cfg) {
  HyperParams hp = params.hyper();
  if (cfg.dropout_given) hp.dropout_rate = cfg.hp.dropout_rate;
  if (cfg.lambda_given) hp.lambda = cfg.hp.lambda;
  if (cfg.seq_len_given) hp.seq_len = cfg.hp.seq_len;
  if (hp.dropout_rate == params.hyper().dropout_rate && hp.lambda == params.hyper().lambda &&
      hp.seq_len == params.hyper().seq_len) {
    return params;
  }
  ModelParams out(hp);
  for (std::size_t i = 0; i < params.size(); ++i) out.tensor(i) = params.tensor(i);
  return out;
}

void write_report_files(const EvalReport& report, const fs::path& base) {
  {
    std::ofstream txt(base.string() + ".txt");
    if (!txt) throw Error(ErrorKind::IoError, "cannot write " + base.string() + ".txt");
    write_report_text(txt, report);
  }
  std::ofstream js(base.string() + ".json");
  if (!js) throw Error(ErrorKind::IoError, "cannot write " + base.string() + ".json");
  js << report_json(report) << '\n';
}

std::unique_ptr<std::ofstream> open_log(const std::string& path) {
  if (path.empty()) return nullptr;
  auto f = std::make_unique<std::ofstream>(path, std::ios::trunc);
  if (!*f) throw Error(ErrorKind::IoError, "cannot write log " + path);
  *f << "step\tepoch\tloss\tval_acc\n";
  return f;
}

}  // namespace

int cmd_synth(const RunConfig& cfg) {
  require(cfg.out, "--out");
  SyntheticCohortConfig sc;
  if (cfg.profile == "default") {
    sc = default_cohort_config();
  } else if (cfg.profile == "separable") {
    sc = separable_cohort_config();
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown profile '" + cfg.profile + "' (default|separable)");
  }
  sc.n_subjects = cfg.subjects;
  sc.epochs_per_subject = cfg.epochs_per_subject;
  sc.mismatch = parse_mismatch(cfg.mismatch, sc.bands.size());
  sc.rng_seed = cfg.seed;
  sc.channel_name = cfg.channel;
  sc.subject_prefix = cfg.prefix;
  const auto cohort = generate_synthetic_cohort(sc);
  save_cohort(cohort, cfg.out);
  std::cout << "wrote " << cohort.size() << " recordings to " << cfg.out << '\n';
  return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
  require(cfg.cohort, "--cohort");
  require(cfg.out, "--out");
  cfg.hp.validate();
  const auto cohort = load_prepared(cfg.cohort);
  auto log = open_log(cfg.log);
  const auto result = pretrain(cohort, cfg.hp, train_config(cfg), log.get());
  save_checkpoint(result.params, cfg.out);
  std::cout << "pretrained " << result.steps << " steps; checkpoint " << cfg.out << '\n';
  return 0;
}

int cmd_finetune(const RunConfig& cfg) {
  require(cfg.init, "--init");
  require(cfg.out, "--out");
  const auto regime = parse_regime(cfg.regime);
  if (!regime) throw Error(ErrorKind::InvalidArgument, "unknown regime '" + cfg.regime + "'");
  const auto init = load_checkpoint(cfg.init);
  if (*regime == Regime::DirectTransfer) {
    save_checkpoint(init, cfg.out);
    std::cout << "direct transfer: checkpoint copied to " << cfg.out << '\n';
    return 0;
  }
  require(cfg.train_dir, "--train");
  require(cfg.val_dir, "--val");
  const auto params = with_training_overrides(init, cfg);
  const auto train_set = load_prepared(cfg.train_dir);
  const auto val_set = load_prepared(cfg.val_dir);
  auto log = open_log(cfg.log);
  const auto ft = finetune(params, mask_for(*regime), train_set, val_set, train_config(cfg), log.get());
  save_checkpoint(ft.best, cfg.out);
  std::printf("finetuned %zu steps; validation accuracy %.4f -> %.4f (step %zu); checkpoint %s\n", ft.steps,
              ft.init_val_acc, ft.best_val_acc, ft.best_step, cfg.out.c_str());
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  require(cfg.checkpoint, "--checkpoint");
  require(cfg.cohort, "--cohort");
  require(cfg.out, "--out");
  const auto params = load_checkpoint(cfg.checkpoint);
  const auto cohort = load_prepared(cfg.cohort);
  const std::size_t seq_len = params.hyper().seq_len;
  Confusion total{};
  if (!cfg.hypnogram_dir.empty()) fs::create_directories(cfg.hypnogram_dir);
  for (const auto& rec : cohort) {
    const auto res = sliding_infer(params, rec, seq_len);
    accumulate(total, confusion_matrix(rec.labels, res.predicted));
    if (!cfg.hypnogram_dir.empty()) {
      std::ofstream h(fs::path(cfg.hypnogram_dir) / (rec.id + ".hyp"));
      if (!h) throw Error(ErrorKind::IoError, "cannot write hypnogram for " + rec.id);
      write_hypnogram(h, res.predicted);
    }
  }
  const auto report = compute_metrics(total);
  write_report_files(report, cfg.out);
  write_report_text(std::cout, report);
  return 0;
}

int cmd_loso(const RunConfig& cfg) {
  require(cfg.cohort, "--cohort");
  require(cfg.out, "--out");
  const auto regime = parse_regime(cfg.regime);
  if (!regime) throw Error(ErrorKind::InvalidArgument, "unknown regime '" + cfg.regime + "'");
  std::optional<ModelParams> pretrained;
  std::optional<ModelParams> scratch;
  if (cfg.scratch) {
    cfg.hp.validate();
    scratch = initialize(cfg.hp, cfg.seed);
  } else {
    require(cfg.init, "--init");
    pretrained = with_training_overrides(load_checkpoint(cfg.init), cfg);
  }
  const auto cohort = load_prepared(cfg.cohort);
  fs::create_directories(cfg.out);
  auto log = open_log(cfg.log);
  LosoOptions opts;
  opts.jobs = cfg.jobs;
  if (scratch) opts.scratch_init = &*scratch;
  const auto result = loso_cv(cohort, scratch ? *scratch : *pretrained, *regime, train_config(cfg), opts, log.get());
  for (std::size_t k = 0; k < result.folds.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "fold_%02zu", k + 1);
    write_report_files(result.folds[k].report, fs::path(cfg.out) / name);
  }
  write_report_files(result.pooled, fs::path(cfg.out) / "pooled");
  write_report_files(result.fold_averaged, fs::path(cfg.out) / "fold_averaged");
  std::cout << "regime " << (cfg.scratch ? "scratch" : regime_name(*regime)) << ", " << result.folds.size()
            << " folds\n";
  write_report_text(std::cout, result.pooled);
  return 0;
}

int cmd_spectrogram(const RunConfig& cfg) {
  require(cfg.recording, "--recording");
  require(cfg.out, "--out");
  const auto rec = load_recording(cfg.recording);
  if (cfg.epoch_index >= rec.n_epochs()) {
    throw Error(ErrorKind::InvalidArgument, "epoch " + std::to_string(cfg.epoch_index) + " out of range");
  }
  const auto img = stft_logpower(rec.epoch(cfg.epoch_index), cfg.epoch_index);
  std::ofstream out(cfg.out);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + cfg.out);
  char buf[32];
  for (std::size_t f = 0; f < kFreqBins; ++f) {
    for (std::size_t t = 0; t < kFrames; ++t) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(img.at(f, t)));
      out << (t ? "," : "") << buf;
    }
    out << '\n';
  }
  return 0;
}

}  // namespace seqsleep::cli
