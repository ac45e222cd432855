#include "seqsleep/network.hpp"

#include <cmath>
#include <cstring>

#include "seqsleep/rng.hpp"

namespace seqsleep {

void HyperParams::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (n_freq == 0) fail("n_freq must be > 0");
  if (n_filters == 0 || n_filters >= n_freq) fail("filterbank size M must satisfy 0 < M < F");
  if (ernn_hidden == 0 || seqrnn_hidden == 0 || attention_size == 0) fail("layer sizes must be > 0");
  if (seq_len == 0) fail("sequence length L must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout rate must be in [0, 1)");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (n_classes != kNumStages) fail("n_classes must be 5");
}

std::vector<ParamSpec> canonical_layout(const HyperParams& hp) {
  std::vector<ParamSpec> out;
  auto gru = [&](const std::string& prefix, std::size_t in, std::size_t h) {
    for (const char* gate : {"z", "r", "h"}) {
      out.push_back({prefix + ".W" + gate, {in, h}});
      out.push_back({prefix + ".U" + gate, {h, h}});
      out.push_back({prefix + ".b" + gate, {h}});
    }
  };
  const std::size_t a = hp.arnn_width();
  const std::size_t o = hp.seqrnn_width();
  out.push_back({"filterbank.V", {hp.n_freq, hp.n_filters}});
  gru("ernn.fwd", hp.n_filters, hp.ernn_hidden);
  gru("ernn.bwd", hp.n_filters, hp.ernn_hidden);
  out.push_back({"ernn.out.W_ha", {a, a}});
  out.push_back({"ernn.out.b_a", {a}});
  out.push_back({"att.W", {a, hp.attention_size}});
  out.push_back({"att.b", {hp.attention_size}});
  out.push_back({"att.u", {hp.attention_size}});
  gru("seqrnn.fwd", a, hp.seqrnn_hidden);
  gru("seqrnn.bwd", a, hp.seqrnn_hidden);
  out.push_back({"seqrnn.out.W_ho", {o, o}});
  out.push_back({"seqrnn.out.b_o", {o}});
  out.push_back({"softmax.W", {o, hp.n_classes}});
  out.push_back({"softmax.b", {hp.n_classes}});
  return out;
}

ModelParams::ModelParams(const HyperParams& hp) : hp_(hp) {
  hp.validate();
  for (auto& spec : canonical_layout(hp)) {
    names_.push_back(spec.name);
    tensors_.emplace_back(spec.shape, 0.0f);
  }
}

std::size_t ModelParams::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown parameter group '" + name + "'");
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool bitwise_equal(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.name(i) != b.name(i) || !bitwise_equal(a.tensor(i), b.tensor(i))) return false;
  }
  return true;
}

Tensor<float> triangular_filterbank(std::size_t n_freq, std::size_t n_filters) {
  Tensor<float> fb = Tensor<float>::matrix(n_freq, n_filters);
  const double nyquist = kSampleRate / 2.0;
  const double spacing = nyquist / static_cast<double>(n_filters + 1);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const double center = spacing * static_cast<double>(m + 1);
    for (std::size_t k = 0; k < n_freq; ++k) {
      const double f = nyquist * static_cast<double>(k) / static_cast<double>(n_freq - 1);
      fb(k, m) = static_cast<float>(std::max(0.0, 1.0 - std::abs(f - center) / spacing));
    }
  }
  return fb;
}

ModelParams initialize(const HyperParams& hp, std::uint64_t seed) {
  ModelParams p(hp);
  Rng rng(derive_seed(seed, "init"));
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto& t = p.tensor(i);
    const auto& name = p.name(i);
    if (name == "filterbank.V") {
      // Inverse softplus of the triangular shapes, floored so zeros stay finite.
      const auto tri = triangular_filterbank(hp.n_freq, hp.n_filters);
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double y = std::max(1e-4, static_cast<double>(tri[k]));
        t[k] = static_cast<float>(std::log(std::expm1(y)));
      }
    } else if (t.rank() == 2 || name == "att.u") {
      const double fan_in = t.rank() == 2 ? static_cast<double>(t.shape()[0]) : static_cast<double>(t.size());
      const double fan_out = t.rank() == 2 ? static_cast<double>(t.shape()[1]) : 1.0;
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-limit, limit));
    } else if (name.ends_with(".bz")) {
      for (auto& v : t.values()) v = 1.0f;
    }
  }
  return p;
}

Tensor<float> pack_images(std::span<const EpochImage> images) {
  std::vector<const EpochImage*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& img : images) ptrs.push_back(&img);
  return pack_images<float>(std::span<const EpochImage* const>(ptrs));
}

Tensor<float> softmax_rows(const Tensor<float>& logits) {
  Graph<float> g;
  return g.value(g.softmax(g.constant(logits), 1));
}

Tensor<float> classify(const ModelParams& params, const Tensor<float>& outputs) {
  Graph<float> g;
  const Var o = g.constant(outputs);
  const Var logits = g.add_bias(g.matmul(o, g.constant(params.at("softmax.W"))),
                                g.constant(params.at("softmax.b")));
  return g.value(g.softmax(logits, 1));
}

Tensor<float> arnn_features(const ModelParams& params, std::span<const EpochImage> images,
                            std::size_t chunk) {
  const std::size_t width = params.hyper().arnn_width();
  Tensor<float> out = Tensor<float>::matrix(images.size(), width);
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    const std::size_t n = std::min(chunk, images.size() - start);
    Graph<float> g;
    const auto v = bind_params(g, params, std::vector<bool>(params.size(), false));
    const Var packed = g.constant(pack_images(images.subspan(start, n)));
    const Var x = arnn_forward(g, v, packed, kFrames, n, nullptr);
    const auto& X = g.value(x);
    std::copy(X.values().begin(), X.values().end(), out.data() + start * width);
  }
  return out;
}

Tensor<float> window_probabilities(const ModelParams& params, const Tensor<float>& features,
                                   std::size_t seq_len, std::size_t batch) {
  Graph<float> g;
  const auto v = bind_params(g, params, std::vector<bool>(params.size(), false));
  const Var logits = logits_from_features(g, v, g.constant(features), seq_len, batch);
  return g.value(g.softmax(logits, 1));
}

}  // namespace seqsleep
