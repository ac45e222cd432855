#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "seqsleep/errors.hpp"
#include "seqsleep/metrics.hpp"
#include "seqsleep/training.hpp"

using namespace seqsleep;

namespace {

PreparedRecording blank(std::size_t n) {
  PreparedRecording r;
  r.id = "X";
  r.labels.assign(n, StageLabel::N2);
  r.images.resize(n);
  return r;
}

std::vector<Tensor<float>> zero_grads(const ModelParams& p) {
  std::vector<Tensor<float>> g;
  for (std::size_t i = 0; i < p.size(); ++i) g.emplace_back(p.tensor(i).shape(), 0.0f);
  return g;
}

}  // namespace

TEST_CASE("sequence counts") {
  CHECK(make_sequences(blank(20), 20).size() == 1);
  const auto s = make_sequences(blank(25), 20, 3);
  CHECK(s.size() == 6);
  CHECK(s.back().start == 5);
  CHECK(s.back().recording == 3);
  try {
    make_sequences(blank(19), 20);
    FAIL("expected TooShortRecording");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooShortRecording);
  }
}

TEST_CASE("minibatch layout") {
  const auto cohort = testutil::small_cohort(2, 12, 3);
  const std::vector<SequenceSample> samples{{0, "", 2, 3}, {1, "", 5, 3}};
  const auto mb = gather_minibatch(cohort, samples);
  CHECK(mb.packed.shape() == Shape{kFrames * 3 * 2, kFreqBins});
  // Row t*N + n with n = i*B + b.
  const std::size_t N = 6;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t b = 0; b < 2; ++b) {
      const auto& rec = cohort[samples[b].recording];
      const auto& img = rec.images[samples[b].start + i];
      const std::size_t n = i * 2 + b;
      CHECK(mb.packed(7 * N + n, 40) == img.at(40, 7));
      CHECK(mb.targets(n, static_cast<std::size_t>(stage_index(rec.labels[samples[b].start + i]))) == 1.0f);
    }
}

TEST_CASE("Adam") {
  const auto hp = testutil::small_model();
  TrainConfig cfg;
  cfg.lr = 1e-3;
  const auto init = initialize(hp, 4);

  SUBCASE("zero gradients leave parameters alone") {
    auto p = init;
    auto state = AdamState::zeros(p);
    adam_step(p, zero_grads(p), state, cfg, {});
    CHECK(bitwise_equal(p, init));
  }
  SUBCASE("first step on w^2/2 from w = 1 moves by lr") {
    ModelParams p(hp);
    p.at("softmax.b")[0] = 1.0f;
    auto g = zero_grads(p);
    g[p.index_of("softmax.b")][0] = 1.0f;  // d/dw of w^2/2 at w = 1
    auto state = AdamState::zeros(p);
    adam_step(p, g, state, cfg, {});
    // m_hat = g, v_hat = g^2: step = lr * g / (|g| + eps).
    CHECK(p.at("softmax.b")[0] == doctest::Approx(1.0 - 1e-3 / (1.0 + 1e-8)).epsilon(1e-6));
  }
  SUBCASE("frozen groups are untouched") {
    auto p = init;
    auto g = zero_grads(p);
    for (auto& t : g)
      for (auto& v : t.values()) v = 0.5f;
    std::vector<bool> trainable(p.size(), false);
    trainable[p.index_of("softmax.W")] = true;
    auto state = AdamState::zeros(p);
    adam_step(p, g, state, cfg, trainable);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CAPTURE(p.name(i));
      CHECK(bitwise_equal(p.tensor(i), init.tensor(i)) == !trainable[i]);
    }
  }
  SUBCASE("clipping bounds the first step") {
    auto p = init;
    auto g = zero_grads(p);
    g[0][0] = 100.0f;
    g[0][1] = 1.0f;
    auto state = AdamState::zeros(p);
    cfg.clip_norm = 5.0;
    const double norm = adam_step(p, g, state, cfg, {});
    CHECK(norm == doctest::Approx(std::sqrt(10001.0)));
  }
}

TEST_CASE("gradients of frozen groups are zero") {
  const auto hp = testutil::small_model();
  const auto cohort = testutil::small_cohort(1, 8, 5);
  const auto seqs = make_sequences(cohort[0], hp.seq_len);
  const auto mb = gather_minibatch(cohort, std::span<const SequenceSample>(seqs).first(2));
  const auto p = initialize(hp, 5);
  std::vector<bool> trainable(p.size(), true);
  trainable[p.index_of("filterbank.V")] = false;
  const auto lg = loss_and_gradients(p, mb, trainable, 0.0, hp.lambda, nullptr);
  for (float v : lg.grads[p.index_of("filterbank.V")].values()) CHECK(v == 0.0f);
  double s = 0.0;
  for (float v : lg.grads[p.index_of("att.u")].values()) s += std::abs(v);
  CHECK(s > 0.0);
}

TEST_CASE("training runs") {
  const auto hp = testutil::small_model();
  const auto cohort = testutil::small_cohort(2, 16, 7);
  auto cfg = testutil::quick_train(7);

  SUBCASE("zero epochs returns the initialization") {
    cfg.epochs = 0;
    const auto r = pretrain(cohort, hp, cfg);
    CHECK(r.steps == 0);
    CHECK(bitwise_equal(r.params, initialize(hp, cfg.seed)));
  }
  SUBCASE("same seed, same result") {
    cfg.max_steps = 6;
    std::ostringstream log1, log2;
    const auto a = pretrain(cohort, hp, cfg, &log1);
    const auto b = pretrain(cohort, hp, cfg, &log2);
    CHECK(a.steps == 6);
    CHECK(bitwise_equal(a.params, b.params));
    CHECK(log1.str() == log2.str());
    cfg.seed = 8;
    CHECK(!bitwise_equal(a.params, pretrain(cohort, hp, cfg).params));
  }
  SUBCASE("filterbank stays nonnegative") {
    cfg.max_steps = 5;
    cfg.lr = 0.5;
    const auto r = pretrain(cohort, hp, cfg);
    Graph<float> g;
    const auto w = g.value(g.softplus(g.constant(r.params.at("filterbank.V"))));
    for (float v : w.values()) CHECK(v >= 0.0f);
  }
}

TEST_CASE("finetuning") {
  const auto hp = testutil::small_model();
  const auto train_set = testutil::small_cohort(2, 16, 9, 1.2);
  const auto val_set = testutil::small_cohort(1, 16, 10, 1.2);
  const auto init = initialize(hp, 11);
  auto cfg = testutil::quick_train(12);

  SUBCASE("all frozen returns the input") {
    const auto r = finetune(init, FreezeMask::all(false), train_set, val_set, cfg);
    CHECK(r.steps == 0);
    CHECK(bitwise_equal(r.best, init));
  }
  SUBCASE("softmax only") {
    FreezeMask mask = FreezeMask::all(false);
    mask.set("softmax.W", true);
    mask.set("softmax.b", true);
    cfg.max_steps = 8;
    const auto r = finetune(init, mask, train_set, val_set, cfg);
    for (std::size_t i = 0; i < init.size(); ++i) {
      if (init.name(i).starts_with("softmax.")) continue;
      CHECK(bitwise_equal(r.last.tensor(i), init.tensor(i)));
    }
    CHECK(!bitwise_equal(r.last.at("softmax.W"), init.at("softmax.W")));
  }
  SUBCASE("best is at least as good as the start") {
    cfg.epochs = 2;
    const auto r = finetune(init, FreezeMask::all(true), train_set, val_set, cfg);
    CHECK(r.best_val_acc >= r.init_val_acc);
    CHECK(r.evaluations.front().step == 0);
    CHECK(fused_accuracy(r.best, val_set, hp.seq_len) == r.best_val_acc);
  }
  SUBCASE("patience 0 stops at the first evaluation") {
    cfg.early_stop_patience = 0;
    cfg.epochs = 3;
    const auto r = finetune(init, FreezeMask::all(true), train_set, val_set, cfg);
    CHECK(r.steps <= cfg.eval_every);
  }
  SUBCASE("mask must match the layout") {
    CHECK_NOTHROW(FreezeMask::all(true).for_params(init));
    FreezeMask wrong({"a", "b"}, {true, false});
    CHECK_THROWS_AS(finetune(init, wrong, train_set, val_set, cfg), Error);
  }
}
