#include "seqsleep/training.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "seqsleep/metrics.hpp"
#include "seqsleep/rng.hpp"

namespace seqsleep {

// ---- FreezeMask ------------------------------------------------------------

FreezeMask::FreezeMask() : FreezeMask(ModelParams(HyperParams{}).names(), {}) {}

FreezeMask::FreezeMask(std::vector<std::string> names, std::vector<bool> trainable)
    : names_(std::move(names)), trainable_(std::move(trainable)) {
  if (trainable_.empty()) trainable_.assign(names_.size(), true);
  if (trainable_.size() != names_.size()) {
    throw Error(ErrorKind::InvalidArgument, "freeze mask names and flags differ in length");
  }
}

FreezeMask FreezeMask::all(bool trainable) {
  FreezeMask m;
  m.trainable_.assign(m.names_.size(), trainable);
  return m;
}

bool FreezeMask::is_trainable(const std::string& group) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == group) return trainable_[i];
  }
  throw Error(ErrorKind::InvalidArgument, "unknown parameter group '" + group + "'");
}

void FreezeMask::set(const std::string& group, bool trainable) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == group) {
      trainable_[i] = trainable;
      return;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown parameter group '" + group + "'");
}

std::size_t FreezeMask::count_trainable() const {
  std::size_t n = 0;
  for (bool b : trainable_) n += b ? 1 : 0;
  return n;
}

std::vector<bool> FreezeMask::for_params(const ModelParams& params) const {
  if (params.names() != names_) {
    throw Error(ErrorKind::ShapeMismatch, "freeze mask groups do not match the parameter layout");
  }
  return trainable_;
}

// ---- data ------------------------------------------------------------------

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (batch_size == 0) fail("batch_size must be > 0");
  if (!(lr > 0.0)) fail("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("Adam epsilon must be > 0");
  if (eval_every == 0) fail("eval_every must be > 0");
}

PreparedRecording prepare_recording(const Recording& rec) {
  validate(rec);
  PreparedRecording out;
  out.id = rec.subject_id;
  out.images = epoch_images(rec.samples);
  out.labels = rec.epoch_labels;
  return out;
}

std::vector<PreparedRecording> prepare_cohort(std::span<const Recording> recordings) {
  std::vector<PreparedRecording> out;
  out.reserve(recordings.size());
  for (const auto& r : recordings) out.push_back(prepare_recording(r));
  return out;
}

std::vector<SequenceSample> make_sequences(const PreparedRecording& rec, std::size_t seq_len,
                                           std::size_t recording_index) {
  if (seq_len == 0 || rec.n_epochs() < seq_len) {
    throw Error(ErrorKind::TooShortRecording, rec.id + ": " + std::to_string(rec.n_epochs()) +
                                                  " epochs, sequence length " + std::to_string(seq_len));
  }
  std::vector<SequenceSample> out;
  out.reserve(rec.n_epochs() - seq_len + 1);
  for (std::size_t s = 0; s + seq_len <= rec.n_epochs(); ++s) {
    out.push_back({recording_index, rec.id, s, seq_len});
  }
  return out;
}

Minibatch gather_minibatch(std::span<const PreparedRecording> cohort,
                           std::span<const SequenceSample> samples) {
  Minibatch mb;
  mb.batch = samples.size();
  mb.seq_len = samples.empty() ? 0 : samples[0].length;
  std::vector<const EpochImage*> images(mb.seq_len * mb.batch);
  mb.targets = Tensor<float>::matrix(mb.seq_len * mb.batch, kNumStages);
  for (std::size_t b = 0; b < mb.batch; ++b) {
    const auto& s = samples[b];
    if (s.length != mb.seq_len) throw Error(ErrorKind::ShapeMismatch, "mixed sequence lengths in a minibatch");
    const auto& rec = cohort[s.recording];
    for (std::size_t i = 0; i < mb.seq_len; ++i) {
      const std::size_t n = i * mb.batch + b;
      images[n] = &rec.images[s.start + i];
      mb.targets(n, static_cast<std::size_t>(stage_index(rec.labels[s.start + i]))) = 1.0f;
    }
  }
  mb.packed = pack_images<float>(std::span<const EpochImage* const>(images));
  return mb;
}

// ---- optimization ----------------------------------------------------------

AdamState AdamState::zeros(const ModelParams& params) {
  AdamState s;
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m.emplace_back(params.tensor(i).shape(), 0.0f);
    s.v.emplace_back(params.tensor(i).shape(), 0.0f);
  }
  return s;
}

double adam_step(ModelParams& params, const std::vector<Tensor<float>>& grads, AdamState& state,
                 const TrainConfig& cfg, const std::vector<bool>& trainable) {
  auto is_trainable = [&](std::size_t i) { return trainable.empty() || trainable[i]; };
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!is_trainable(i)) continue;
    for (float g : grads[i].values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  const double clip = cfg.clip_norm > 0.0 && norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!is_trainable(i)) continue;
    auto& p = params.tensor(i);
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = clip * g[k];
      const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      p[k] = static_cast<float>(p[k] - cfg.lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.adam_eps));
    }
  }
  return norm;
}

LossAndGrads loss_and_gradients(const ModelParams& params, const Minibatch& batch,
                                const std::vector<bool>& trainable, double dropout_rate,
                                double lambda, Rng* dropout_rng) {
  Graph<float> g;
  const auto v = bind_params(g, params, trainable);
  const Var packed = g.constant(batch.packed);
  Dropout dropout{dropout_rate, dropout_rng};
  const bool train_mode = dropout_rate > 0.0 && dropout_rng != nullptr;
  const std::size_t n_frames = batch.packed.rows() / (batch.seq_len * batch.batch);
  const Var logits = forward_logits(g, v, packed, n_frames, batch.seq_len, batch.batch,
                                    train_mode ? &dropout : nullptr);
  const Var loss = sequence_loss(g, v, trainable, logits, batch.targets, batch.seq_len, lambda);
  LossAndGrads out;
  out.loss = g.value(loss)[0];
  out.logits = g.value(logits);
  g.backward(loss);
  for (auto var : v.all) out.grads.push_back(g.grad(var));
  return out;
}

void write_log_line(std::ostream& out, const StepLog& entry) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.6f\t", entry.step, entry.epoch, entry.loss);
  out << buf;
  if (entry.val_acc) {
    std::snprintf(buf, sizeof buf, "%.6f", *entry.val_acc);
    out << buf;
  }
  out << '\n';
}

namespace {

std::vector<SequenceSample> sequence_pool(std::span<const PreparedRecording> cohort, std::size_t seq_len) {
  std::vector<SequenceSample> pool;
  for (std::size_t r = 0; r < cohort.size(); ++r) {
    auto seqs = make_sequences(cohort[r], seq_len, r);
    pool.insert(pool.end(), seqs.begin(), seqs.end());
  }
  return pool;
}

// Inverse class frequency over the cohort, normalized to mean 1 over present classes.
std::array<float, kNumStages> class_weights(std::span<const PreparedRecording> cohort) {
  std::array<double, kNumStages> count{};
  double total = 0.0;
  for (const auto& r : cohort) {
    for (auto l : r.labels) {
      count[static_cast<std::size_t>(stage_index(l))] += 1.0;
      total += 1.0;
    }
  }
  std::size_t present = 0;
  for (double c : count) present += c > 0.0 ? 1 : 0;
  std::array<float, kNumStages> w{};
  for (std::size_t c = 0; c < kNumStages; ++c) {
    w[c] = count[c] > 0.0 ? static_cast<float>(total / (static_cast<double>(present) * count[c])) : 0.0f;
  }
  return w;
}

// Drives shuffled minibatch steps; `after_step` returns false to stop early.
template <class AfterStep>
std::size_t run_steps(ModelParams& params, std::span<const PreparedRecording> cohort, const TrainConfig& cfg,
                      const std::vector<bool>& trainable, std::vector<StepLog>& log, std::ostream* out,
                      AfterStep&& after_step) {
  cfg.validate();
  const auto& hp = params.hyper();
  auto pool = sequence_pool(cohort, hp.seq_len);
  std::optional<std::array<float, kNumStages>> weights;
  if (cfg.class_weighting) weights = class_weights(cohort);
  AdamState state = AdamState::zeros(params);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", epoch));
    shuffle_rng.shuffle(pool.begin(), pool.end());
    for (std::size_t start = 0; start < pool.size(); start += cfg.batch_size) {
      if (cfg.max_steps > 0 && step >= cfg.max_steps) return step;
      const std::size_t n = std::min(cfg.batch_size, pool.size() - start);
      auto batch = gather_minibatch(cohort, std::span<const SequenceSample>(pool).subspan(start, n));
      if (weights) {
        for (std::size_t r = 0; r < batch.targets.rows(); ++r) {
          for (std::size_t c = 0; c < kNumStages; ++c) batch.targets(r, c) *= (*weights)[c];
        }
      }
      Rng dropout_rng(derive_seed(cfg.seed, "dropout", step));
      auto lg = loss_and_gradients(params, batch, trainable, hp.dropout_rate, hp.lambda, &dropout_rng);
      adam_step(params, lg.grads, state, cfg, trainable);
      ++step;
      StepLog entry{step, epoch, lg.loss, std::nullopt};
      const bool keep_going = after_step(step, entry);
      log.push_back(entry);
      if (out) write_log_line(*out, entry);
      if (!keep_going) return step;
    }
  }
  return step;
}

}  // namespace

TrainResult train(const ModelParams& init, std::span<const PreparedRecording> cohort, const TrainConfig& cfg,
                  const std::vector<bool>& trainable, std::ostream* log) {
  if (cohort.empty()) throw Error(ErrorKind::InvalidArgument, "training cohort is empty");
  TrainResult result;
  result.params = init;
  result.steps = run_steps(result.params, cohort, cfg, trainable, result.log, log,
                           [](std::size_t, StepLog&) { return true; });
  return result;
}

TrainResult pretrain(std::span<const PreparedRecording> cohort, const HyperParams& hp, const TrainConfig& cfg,
                     std::ostream* log) {
  return train(initialize(hp, cfg.seed), cohort, cfg, {}, log);
}

FinetuneResult finetune(const ModelParams& init, const FreezeMask& mask,
                        std::span<const PreparedRecording> train_set,
                        std::span<const PreparedRecording> val_set, const TrainConfig& cfg, std::ostream* log) {
  if (train_set.empty() || val_set.empty()) {
    throw Error(ErrorKind::InvalidArgument, "finetuning needs nonempty training and validation sets");
  }
  const auto trainable = mask.for_params(init);
  const std::size_t seq_len = init.hyper().seq_len;

  FinetuneResult result;
  result.best = init;
  result.last = init;
  result.init_val_acc = fused_accuracy(init, val_set, seq_len);
  result.best_val_acc = result.init_val_acc;
  result.evaluations.push_back({0, result.init_val_acc});
  if (mask.count_trainable() == 0) return result;

  std::size_t last_improvement = 0;
  result.steps = run_steps(result.last, train_set, cfg, trainable, result.log, log,
                           [&](std::size_t step, StepLog& entry) {
                             if (step % cfg.eval_every != 0) return true;
                             const double acc = fused_accuracy(result.last, val_set, seq_len);
                             entry.val_acc = acc;
                             result.evaluations.push_back({step, acc});
                             if (acc > result.best_val_acc) {
                               result.best_val_acc = acc;
                               result.best = result.last;
                               result.best_step = step;
                               last_improvement = step;
                             }
                             return step - last_improvement < cfg.early_stop_patience;
                           });
  return result;
}

}  // namespace seqsleep
