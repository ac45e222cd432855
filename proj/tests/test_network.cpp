#include <doctest.h>

#include <cmath>

#include "model_oracle.hpp"
#include "seqsleep/errors.hpp"
#include "seqsleep/network.hpp"
#include "seqsleep/rng.hpp"

using namespace seqsleep;
using testutil::random_params;
using testutil::tiny_hyper;

namespace {

constexpr std::size_t kT = 5;  // frames in the tiny test images

// n random images of kT frames x F bins; returns oracle form and packed rows.
struct Images {
  std::vector<std::vector<oracle::Vec>> frames;  // [epoch][t][f]
  Tensor<double> packed;
};

Images random_images(std::size_t n, std::size_t F, std::uint64_t seed) {
  Rng rng(seed);
  Images im;
  im.frames.assign(n, std::vector<oracle::Vec>(kT, oracle::Vec(F)));
  im.packed = Tensor<double>::matrix(kT * n, F);
  for (std::size_t e = 0; e < n; ++e)
    for (std::size_t t = 0; t < kT; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        const double v = rng.uniform(-2.0, 2.0);
        im.frames[e][t][f] = v;
        im.packed(t * n + e, f) = v;
      }
  return im;
}

// Swaps the fwd/bwd GRU sets of a subnetwork and the matching row blocks of
// its output projection.
ModelParams mirrored(const ModelParams& p, const std::string& net, const std::string& proj) {
  ModelParams m = p;
  for (const char* suffix : {"Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh"}) {
    std::swap(m.at(net + ".fwd." + suffix), m.at(net + ".bwd." + suffix));
  }
  auto& W = m.at(proj);
  const std::size_t half = W.shape()[0] / 2, cols = W.shape()[1];
  const auto orig = p.at(proj);
  for (std::size_t i = 0; i < 2 * half; ++i)
    for (std::size_t j = 0; j < cols; ++j) W(i, j) = orig((i + half) % (2 * half), j);
  return m;
}

Var uniform_like(Graph<double>& g, std::size_t rows) { return g.constant(Tensor<double>::matrix(rows, kNumStages)); }

}  // namespace

TEST_CASE("filterbank") {
  Rng rng(3);
  auto frames = Tensor<double>::matrix(7, 12);
  auto V = Tensor<double>::matrix(12, 4);
  for (auto& v : frames.values()) v = rng.uniform(-3.0, 3.0);
  for (auto& v : V.values()) v = rng.uniform(-2.0, 2.0);
  Graph<double> g;
  const auto out = g.value(filterbank_apply(g, g.constant(frames), g.constant(V)));
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t m = 0; m < 4; ++m) {
      double s = 0.0;
      for (std::size_t f = 0; f < 12; ++f) s += frames(r, f) * std::log1p(std::exp(V(f, m)));
      CHECK(out(r, m) == doctest::Approx(s).epsilon(1e-5));
    }
  // Very negative V: weights vanish.
  const auto zero = g.value(filterbank_apply(g, g.constant(frames), g.constant(Tensor<double>({12, 4}, -800.0))));
  for (double v : zero.values()) CHECK(std::abs(v) < 1e-300);

  // Nonnegative weights whatever V is.
  Graph<float> gf;
  const auto init = initialize(HyperParams{}, 1);
  const auto w = gf.value(gf.softplus(gf.constant(init.at("filterbank.V"))));
  for (float v : w.values()) CHECK(v >= 0.0f);
}

TEST_CASE("triangular initialization") {
  const auto tri = triangular_filterbank(129, 32);
  // Each filter peaks at 1 and the filters tile 0-50 Hz.
  for (std::size_t m = 0; m < 32; ++m) {
    float mx = 0.0f;
    for (std::size_t k = 0; k < 129; ++k) mx = std::max(mx, tri(k, m));
    CHECK(mx > 0.5f);
  }
  const auto p = initialize(HyperParams{}, 7);
  Graph<float> g;
  const auto w = g.value(g.softplus(g.constant(p.at("filterbank.V"))));
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(std::max(1e-4f, tri[i])).epsilon(1e-3));
  for (float b : p.at("ernn.fwd.bz").values()) CHECK(b == 1.0f);
  for (float b : p.at("ernn.fwd.br").values()) CHECK(b == 0.0f);
  CHECK(bitwise_equal(p, initialize(HyperParams{}, 7)));
  CHECK(!bitwise_equal(p, initialize(HyperParams{}, 8)));
}

TEST_CASE("GRU") {
  const auto hp = tiny_hyper();
  SUBCASE("zero fixed point") {
    const ModelParams zero(hp);
    Graph<double> g;
    const auto v = bind_params(g, zero);
    auto x = Tensor<double>::matrix(kT * 2, hp.n_filters);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.0;
    for (auto h : gru_scan(g, g.constant(x), kT, 2, v.ernn_fwd, false))
      for (double e : g.value(h).values()) CHECK(e == 0.0);
  }
  SUBCASE("scalar oracle and bound") {
    const auto p = random_params(hp, 11, 2.0);
    Rng rng(12);
    const std::size_t batch = 3;
    auto x = Tensor<double>::matrix(kT * batch, hp.n_filters);
    std::vector<std::vector<oracle::Vec>> xs(batch, std::vector<oracle::Vec>(kT, oracle::Vec(hp.n_filters)));
    for (std::size_t t = 0; t < kT; ++t)
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < hp.n_filters; ++j) xs[b][t][j] = x(t * batch + b, j) = rng.uniform(-5.0, 5.0);
    for (bool reverse : {false, true}) {
      Graph<double> g;
      const auto v = bind_params(g, p);
      const auto states = gru_scan(g, g.constant(x), kT, batch, v.ernn_fwd, reverse);
      for (std::size_t b = 0; b < batch; ++b) {
        const auto ref = oracle::gru_run(oracle::gru(p, "ernn.fwd"), xs[b], reverse);
        for (std::size_t t = 0; t < kT; ++t)
          for (std::size_t j = 0; j < hp.ernn_hidden; ++j) {
            const double h = g.value(states[t])(b, j);
            CHECK(h == doctest::Approx(ref[t][j]).epsilon(1e-6));
            CHECK(std::abs(h) < 1.0);
          }
      }
    }
  }
}

TEST_CASE("epoch-level encoder") {
  const auto hp = tiny_hyper();
  const auto p = random_params(hp, 21);

  SUBCASE("zero input, zero recurrent weights collapse to the output bias") {
    ModelParams q(hp);
    q.at("ernn.out.b_a") = p.at("ernn.out.b_a");
    Graph<double> g;
    const auto v = bind_params(g, q);
    const auto a = g.value(ernn_encode(g, v, g.constant(Tensor<double>::matrix(kT * 2, hp.n_filters)), kT, 2));
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c) CHECK(a(r, c) == doctest::Approx(p.at("ernn.out.b_a")[c]));
  }

  SUBCASE("reversal swaps directions") {
    Rng rng(22);
    auto z = Tensor<double>::matrix(kT, hp.n_filters);
    auto zr = z;
    for (std::size_t t = 0; t < kT; ++t)
      for (std::size_t j = 0; j < hp.n_filters; ++j) z(t, j) = zr(kT - 1 - t, j) = rng.uniform(-2.0, 2.0);
    Graph<double> g;
    const auto a = g.value(ernn_encode(g, bind_params(g, p), g.constant(z), kT, 1));
    const auto m = mirrored(p, "ernn", "ernn.out.W_ha");
    const auto ar = g.value(ernn_encode(g, bind_params(g, m), g.constant(zr), kT, 1));
    for (std::size_t t = 0; t < kT; ++t)
      for (std::size_t c = 0; c < a.cols(); ++c) CHECK(ar(t, c) == doctest::Approx(a(kT - 1 - t, c)).epsilon(1e-6));
  }

  SUBCASE("single frame") {
    auto z = Tensor<double>::matrix(1, hp.n_filters);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = 0.3 * static_cast<double>(j) - 0.7;
    Graph<double> g;
    const auto a = g.value(ernn_encode(g, bind_params(g, p), g.constant(z), 1, 1));
    const oracle::Vec zin(z.values().begin(), z.values().end());
    const oracle::Vec h0(hp.ernn_hidden, 0.0);
    const auto hf = oracle::gru_step(oracle::gru(p, "ernn.fwd"), zin, h0);
    const auto hb = oracle::gru_step(oracle::gru(p, "ernn.bwd"), zin, h0);
    const auto ref = oracle::affine(oracle::concat(hb, hf), oracle::mat(p.at("ernn.out.W_ha")), oracle::vec(p.at("ernn.out.b_a")));
    for (std::size_t c = 0; c < ref.size(); ++c) CHECK(a[c] == doctest::Approx(ref[c]).epsilon(1e-6));
  }
}

TEST_CASE("attention pooling") {
  const auto hp = tiny_hyper();
  const auto p = random_params(hp, 31, 1.0);
  const std::size_t D = hp.arnn_width();
  Rng rng(32);

  SUBCASE("identical frames get equal weights") {
    auto enc = Tensor<double>::matrix(kT * 2, D);
    for (std::size_t e = 0; e < 2; ++e)
      for (std::size_t d = 0; d < D; ++d) {
        const double v = rng.uniform(-1.0, 1.0);
        for (std::size_t t = 0; t < kT; ++t) enc(t * 2 + e, d) = v;
      }
    Graph<double> g;
    const auto att = attention_pool(g, bind_params(g, p), g.constant(enc), kT, 2);
    for (double w : g.value(att.weights).values()) CHECK(w == doctest::Approx(1.0 / kT));
    for (std::size_t e = 0; e < 2; ++e)
      for (std::size_t d = 0; d < D; ++d) CHECK(g.value(att.pooled)(e, d) == doctest::Approx(enc(e, d)));
  }
  SUBCASE("single frame") {
    auto enc = Tensor<double>::matrix(3, D);
    for (auto& v : enc.values()) v = rng.uniform(-1.0, 1.0);
    Graph<double> g;
    const auto att = attention_pool(g, bind_params(g, p), g.constant(enc), 1, 3);
    for (double w : g.value(att.weights).values()) CHECK(w == 1.0);
    CHECK(g.value(att.pooled) == enc);
  }
  SUBCASE("weighted sum oracle") {
    const std::size_t n = 4;
    auto enc = Tensor<double>::matrix(kT * n, D);
    for (auto& v : enc.values()) v = rng.uniform(-2.0, 2.0);
    Graph<double> g;
    const auto att = attention_pool(g, bind_params(g, p), g.constant(enc), kT, n);
    const auto W = oracle::mat(p.at("att.W"));
    const auto b = oracle::vec(p.at("att.b"));
    const auto u = oracle::vec(p.at("att.u"));
    for (std::size_t e = 0; e < n; ++e) {
      std::vector<double> score(kT);
      double total = 0.0;
      for (std::size_t t = 0; t < kT; ++t) {
        oracle::Vec a(D);
        for (std::size_t d = 0; d < D; ++d) a[d] = enc(t * n + e, d);
        const auto proj = oracle::affine(a, W, b);
        for (std::size_t q = 0; q < proj.size(); ++q) score[t] += std::tanh(proj[q]) * u[q];
        total += std::exp(score[t]);
      }
      double wsum = 0.0;
      for (std::size_t t = 0; t < kT; ++t) {
        const double w = g.value(att.weights)(e, t);
        wsum += w;
        CHECK(w == doctest::Approx(std::exp(score[t]) / total).epsilon(1e-9));
      }
      CHECK(std::abs(wsum - 1.0) < 1e-6);
      for (std::size_t d = 0; d < D; ++d) {
        double x = 0.0;
        for (std::size_t t = 0; t < kT; ++t) x += std::exp(score[t]) / total * enc(t * n + e, d);
        CHECK(g.value(att.pooled)(e, d) == doctest::Approx(x).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("ARNN") {
  const auto hp = tiny_hyper();
  const auto p = random_params(hp, 41);
  const auto im = random_images(4, hp.n_freq, 42);

  Graph<double> g;
  const auto v = bind_params(g, p);
  const auto x1 = g.value(arnn_forward(g, v, g.constant(im.packed), kT, 4, nullptr));
  const auto x2 = g.value(arnn_forward(g, v, g.constant(im.packed), kT, 4, nullptr));
  CHECK(x1 == x2);
  CHECK(x1.shape() == Shape{4, hp.arnn_width()});
  Rng rng(1);
  const Dropout off{0.0, &rng};
  CHECK(g.value(arnn_forward(g, v, g.constant(im.packed), kT, 4, &off)) == x1);
  for (std::size_t e = 0; e < 4; ++e) {
    const auto ref = oracle::arnn(p, im.frames[e]);
    for (std::size_t d = 0; d < ref.size(); ++d) CHECK(x1(e, d) == doctest::Approx(ref[d]).epsilon(1e-6));
  }
}

TEST_CASE("SeqRNN") {
  const auto hp = tiny_hyper();
  const auto p = random_params(hp, 51);
  const std::size_t D = hp.arnn_width();
  Rng rng(52);

  SUBCASE("zero collapse") {
    ModelParams q(hp);
    q.at("seqrnn.out.b_o") = p.at("seqrnn.out.b_o");
    Graph<double> g;
    const auto o = g.value(seqrnn_forward(g, bind_params(g, q), g.constant(Tensor<double>::matrix(3, D)), 3, 1));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < o.cols(); ++c) CHECK(o(i, c) == doctest::Approx(p.at("seqrnn.out.b_o")[c]));
  }
  SUBCASE("scalar oracle for L = 1 and L = 3, batch of 2") {
    for (std::size_t L : {1u, 3u}) {
      const std::size_t B = 2;
      auto feats = Tensor<double>::matrix(L * B, D);
      std::vector<std::vector<oracle::Vec>> xs(B, std::vector<oracle::Vec>(L, oracle::Vec(D)));
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t d = 0; d < D; ++d) xs[b][i][d] = feats(i * B + b, d) = rng.uniform(-1.0, 1.0);
      Graph<double> g;
      const auto o = g.value(seqrnn_forward(g, bind_params(g, p), g.constant(feats), L, B));
      for (std::size_t b = 0; b < B; ++b) {
        const auto ref = oracle::seqrnn(p, xs[b]);
        for (std::size_t i = 0; i < L; ++i)
          for (std::size_t c = 0; c < ref[i].size(); ++c) CHECK(o(i * B + b, c) == doctest::Approx(ref[i][c]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("full model against the scalar oracle") {
  const auto hp = tiny_hyper();
  const auto p = random_params(hp, 61);
  const std::size_t L = hp.seq_len, B = 2;
  const auto im = random_images(L * B, hp.n_freq, 62);
  Graph<double> g;
  const auto logits = g.value(forward_logits(g, bind_params(g, p), g.constant(im.packed), kT, L, B, nullptr));
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<std::vector<oracle::Vec>> seq;
    for (std::size_t i = 0; i < L; ++i) seq.push_back(im.frames[i * B + b]);
    const auto ref = oracle::logits(p, seq);
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t c = 0; c < kNumStages; ++c) CHECK(logits(i * B + b, c) == doctest::Approx(ref[i][c]).epsilon(1e-6));
  }
}

TEST_CASE("batch rows are independent") {
  const auto hp = tiny_hyper();
  const auto p = random_params(hp, 71);
  const std::size_t L = hp.seq_len, B = 3;
  const auto im = random_images(L * B, hp.n_freq, 72);
  Graph<float> g;
  const auto v = bind_params(g, p);
  const auto all = g.value(forward_logits(g, v, g.constant(im.packed.cast<float>()), kT, L, B, nullptr));
  for (std::size_t b = 0; b < B; ++b) {
    auto one = Tensor<float>::matrix(kT * L, hp.n_freq);
    for (std::size_t t = 0; t < kT; ++t)
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t f = 0; f < hp.n_freq; ++f) one(t * L + i, f) = static_cast<float>(im.packed(t * L * B + i * B + b, f));
    const auto single = g.value(forward_logits(g, v, g.constant(one), kT, L, 1, nullptr));
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t c = 0; c < kNumStages; ++c) CHECK(single(i, c) == all(i * B + b, c));
  }
}

TEST_CASE("identity ablation bypasses the SeqRNN") {
  const auto hp = tiny_hyper();
  auto p = random_params(hp, 81);
  const auto im = random_images(hp.seq_len, hp.n_freq, 82);
  Graph<double> g;
  const auto v = bind_params(g, p);
  // The ablated head reads the ARNN features directly, so its input width
  // must equal the SeqRNN output width.
  REQUIRE(hp.arnn_width() == hp.seqrnn_width());
  const auto x = arnn_forward(g, v, g.constant(im.packed), kT, hp.seq_len, nullptr);
  const auto ablated = g.value(forward_logits(g, v, g.constant(im.packed), kT, hp.seq_len, 1, nullptr, SeqMode::IdentityAblation));
  const auto direct = g.value(g.add_bias(g.matmul(x, v.sm_W), v.sm_b));
  CHECK(ablated == direct);
  // Ablation ignores the SeqRNN weights entirely.
  for (auto& w : p.at("seqrnn.fwd.Wz").values()) w += 1.0f;
  Graph<double> g2;
  const auto ablated2 = g2.value(forward_logits(g2, bind_params(g2, p), g2.constant(im.packed), kT, hp.seq_len, 1, nullptr, SeqMode::IdentityAblation));
  CHECK(ablated2 == ablated);
}

TEST_CASE("softmax output layer") {
  auto logits = Tensor<float>::matrix(2, 5);
  const auto flat = softmax_rows(logits);
  for (float v : flat.values()) CHECK(v == doctest::Approx(0.2));
  for (std::size_t i = 0; i < 5; ++i) logits(0, i) = static_cast<float>(i) * 0.7f - 1.0f, logits(1, i) = std::sin(static_cast<float>(i));
  const auto a = softmax_rows(logits);
  auto shifted = logits;
  for (auto& v : shifted.values()) v += 3.0f;
  const auto b = softmax_rows(shifted);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-6));
  for (std::size_t r = 0; r < 2; ++r) {
    std::size_t am = 0, al = 0;
    for (std::size_t c = 1; c < 5; ++c) {
      if (a(r, c) > a(r, am)) am = c;
      if (logits(r, c) > logits(r, al)) al = c;
    }
    CHECK(am == al);
  }
}

TEST_CASE("sequence loss") {
  const auto hp = tiny_hyper();
  const std::size_t L = hp.seq_len;
  Tensor<double> targets = Tensor<double>::matrix(L, kNumStages);
  for (std::size_t i = 0; i < L; ++i) targets(i, i % kNumStages) = 1.0;

  const ModelParams zero(hp);
  Graph<double> g;
  const auto v = bind_params(g, zero);
  // Uniform predictions, one sequence: L * ln 5 / L.
  const auto uniform = g.constant(Tensor<double>::matrix(L, kNumStages));
  CHECK(g.value(sequence_loss(g, v, {}, uniform, targets, L, 0.0))[0] == doctest::Approx(std::log(5.0)).epsilon(1e-9));
  // A zero model has no regularization cost.
  CHECK(g.value(sequence_loss(g, v, {}, uniform, targets, L, 0.5))[0] == doctest::Approx(std::log(5.0)).epsilon(1e-9));

  auto sure = Tensor<double>::matrix(L, kNumStages);
  for (std::size_t i = 0; i < L; ++i) sure(i, i % kNumStages) = 60.0;
  CHECK(g.value(sequence_loss(g, v, {}, g.constant(sure), targets, L, 0.0))[0] < 1e-6);

  const auto p = random_params(hp, 91);
  Graph<double> g2;
  const auto v2 = bind_params(g2, p);
  std::vector<bool> trainable(p.size(), false);
  trainable[p.index_of("softmax.W")] = true;
  double sq = 0.0;
  for (float w : p.at("softmax.W").values()) sq += static_cast<double>(w) * w;
  const double base = g2.value(sequence_loss(g2, v2, trainable, uniform_like(g2, L), targets, L, 0.0))[0];
  const double reg = g2.value(sequence_loss(g2, v2, trainable, uniform_like(g2, L), targets, L, 0.01))[0];
  CHECK(reg - base == doctest::Approx(0.005 * sq).epsilon(1e-9));
}

TEST_CASE("parameter layout") {
  HyperParams hp;
  const ModelParams p(hp);
  CHECK(p.names().front() == "filterbank.V");
  CHECK(p.at("filterbank.V").shape() == Shape{129, 32});
  CHECK(p.at("ernn.out.W_ha").shape() == Shape{128, 128});
  CHECK(p.at("seqrnn.fwd.Wz").shape() == Shape{128, 64});
  CHECK(p.at("softmax.W").shape() == Shape{128, 5});
  CHECK(p.names().back() == "softmax.b");
  CHECK_THROWS_AS(p.at("nope"), Error);
  hp.n_filters = 129;
  CHECK_THROWS_AS(hp.validate(), Error);
}
