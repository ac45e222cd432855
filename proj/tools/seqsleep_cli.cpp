#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "seqsleep/config.hpp"
#include "seqsleep/errors.hpp"

using namespace seqsleep;

namespace {

const std::vector<std::string> kSubcommands = {"synth", "pretrain", "finetune", "eval", "loso", "spectrogram"};

// Config-file entries become "--key value" arguments placed right after the
// subcommand, so anything given on the command line later wins.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].starts_with("--config=")) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  std::size_t sub = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), args[i]) != kSubcommands.end()) {
      sub = i;
      break;
    }
  }
  std::vector<std::string> from_file;
  for (const auto& [key, value] : read_config_file(config_path)) {
    from_file.push_back("--" + key);
    if (value != "true") from_file.push_back(value);
  }
  const auto at = sub < args.size() ? sub + 1 : 0;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), from_file.begin(), from_file.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  cli::RunConfig cfg;
  CLI::App app{"Single-channel sequence-to-sequence sleep staging with transfer learning"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // Flags shared by every subcommand.
  auto shared = [&](CLI::App* cmd) {
    cmd->add_option("--config", "Flat key=value file; keys are flag names, flags override it");
    cmd->add_option("--seed", cfg.seed, "Root seed for all random streams")->capture_default_str();
    cmd->add_option("--jobs", cfg.jobs, "Parallel folds for loso")->capture_default_str();
    cmd->add_option("--out", cfg.out, "Output path")->capture_default_str();
  };
  auto hyper = [&](CLI::App* cmd) {
    cmd->add_option("--filters", cfg.hp.n_filters, "Filterbank size M")->capture_default_str();
    cmd->add_option("--ernn-hidden", cfg.hp.ernn_hidden, "Epoch-level GRU units per direction")->capture_default_str();
    cmd->add_option("--attention-size", cfg.hp.attention_size, "Attention projection width")->capture_default_str();
    cmd->add_option("--seqrnn-hidden", cfg.hp.seqrnn_hidden, "Sequence-level GRU units per direction")->capture_default_str();
    cmd->add_option_function<std::size_t>("--seq-len", [&](std::size_t v) { cfg.hp.seq_len = v; cfg.seq_len_given = true; },
                                          "Sequence length L [paper: 20]")->default_val(20);
    cmd->add_option_function<double>("--dropout", [&](double v) { cfg.hp.dropout_rate = v; cfg.dropout_given = true; },
                                      "Dropout rate")->default_val(0.25);
    cmd->add_option_function<double>("--lambda", [&](double v) { cfg.hp.lambda = v; cfg.lambda_given = true; },
                                     "L2 weight")->default_val(1e-3);
  };
  auto training = [&](CLI::App* cmd) {
    cmd->add_option("--epochs", cfg.train.epochs, "Training epochs [paper: 10]")->capture_default_str();
    cmd->add_option("--batch-size", cfg.train.batch_size, "Sequences per minibatch [paper: 32]")->capture_default_str();
    cmd->add_option("--lr", cfg.train.lr, "Adam learning rate [paper: 1e-4]")->capture_default_str();
    cmd->add_option("--patience", cfg.train.early_stop_patience, "Early-stopping patience in steps [paper: 50]")->capture_default_str();
    cmd->add_option("--eval-every", cfg.train.eval_every, "Validation cadence in steps")->capture_default_str();
    cmd->add_option("--clip-norm", cfg.train.clip_norm, "Global gradient-norm clip (<= 0 disables)")->capture_default_str();
    cmd->add_option("--max-steps", cfg.train.max_steps, "Cap on training steps (0 = none)")->capture_default_str();
    cmd->add_flag("--class-weighting", cfg.train.class_weighting, "Inverse-frequency class weights in the loss");
    cmd->add_option("--log", cfg.log, "Per-step training log (tab-separated)")->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort directory");
  shared(synth);
  synth->add_option("--subjects", cfg.subjects, "Number of subjects")->capture_default_str();
  synth->add_option("--epochs", cfg.epochs_per_subject, "Epochs per subject")->capture_default_str();
  synth->add_option("--profile", cfg.profile, "Stage spectra: default|separable")->capture_default_str();
  synth->add_option("--mismatch", cfg.mismatch, "identity or warp=<f>,mix=<0..1>,noise=<p>")->capture_default_str();
  synth->add_option("--channel", cfg.channel, "Channel name written to the files")->capture_default_str();
  synth->add_option("--prefix", cfg.prefix, "Subject id prefix")->capture_default_str();

  auto* pre = app.add_subcommand("pretrain", "Train from scratch on a source cohort");
  shared(pre);
  hyper(pre);
  training(pre);
  pre->add_option("--cohort", cfg.cohort, "Source cohort directory")->capture_default_str();

  auto* ft = app.add_subcommand("finetune", "Finetune a checkpoint under a transfer regime");
  shared(ft);
  hyper(ft);
  training(ft);
  ft->add_option("--init", cfg.init, "Pretrained checkpoint")->capture_default_str();
  ft->add_option("--train", cfg.train_dir, "Finetuning cohort directory")->capture_default_str();
  ft->add_option("--val", cfg.val_dir, "Validation cohort directory")->capture_default_str();
  ft->add_option("--regime", cfg.regime, "direct|softmax|softmax-arnn|softmax-seqrnn|all")->capture_default_str();

  auto* ev = app.add_subcommand("eval", "Fused sliding-window evaluation of a checkpoint");
  shared(ev);
  ev->add_option("--checkpoint", cfg.checkpoint, "Checkpoint to evaluate")->capture_default_str();
  ev->add_option("--cohort", cfg.cohort, "Cohort directory")->capture_default_str();
  ev->add_option("--hypnograms", cfg.hypnogram_dir, "Directory for per-recording predicted label codes")->capture_default_str();

  auto* lo = app.add_subcommand("loso", "Leave-one-subject-out transfer experiment on a target cohort");
  shared(lo);
  hyper(lo);
  training(lo);
  lo->add_option("--init", cfg.init, "Pretrained checkpoint")->capture_default_str();
  lo->add_option("--cohort", cfg.cohort, "Target cohort directory")->capture_default_str();
  lo->add_option("--regime", cfg.regime, "direct|softmax|softmax-arnn|softmax-seqrnn|all")->capture_default_str();
  lo->add_flag("--scratch", cfg.scratch, "Train from a fresh initialization instead of --init");

  auto* sp = app.add_subcommand("spectrogram", "Dump one epoch's log-power image as CSV");
  shared(sp);
  sp->add_option("--recording", cfg.recording, ".rec file")->capture_default_str();
  sp->add_option("--epoch", cfg.epoch_index, "Epoch index")->capture_default_str();

  for (auto* cmd : {synth, pre, ft, ev, lo, sp}) {
    for (auto* opt : cmd->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*synth) return cli::cmd_synth(cfg);
    if (*pre) return cli::cmd_pretrain(cfg);
    if (*ft) return cli::cmd_finetune(cfg);
    if (*ev) return cli::cmd_eval(cfg);
    if (*lo) return cli::cmd_loso(cfg);
    if (*sp) return cli::cmd_spectrogram(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: IoError: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
