#pragma once

// Template definitions for network.hpp.

namespace seqsleep {

template <class T>
ModelVars bind_params(Graph<T>& g, const ModelParams& params, const std::vector<bool>& trainable) {
  if (!trainable.empty() && trainable.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "trainable mask has " + std::to_string(trainable.size()) +
                                              " entries for " + std::to_string(params.size()) +
                                              " parameter groups");
  }
  ModelVars v;
  v.all.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto t = params.tensor(i).template cast<T>();
    const bool train = trainable.empty() || trainable[i];
    v.all.push_back(train ? g.parameter(std::move(t)) : g.constant(std::move(t)));
  }
  std::size_t i = 0;
  auto next = [&] { return v.all[i++]; };
  auto gru = [&] {
    GruVars p;
    p.Wz = next(); p.Uz = next(); p.bz = next();
    p.Wr = next(); p.Ur = next(); p.br = next();
    p.Wh = next(); p.Uh = next(); p.bh = next();
    return p;
  };
  v.fb_V = next();
  v.ernn_fwd = gru();
  v.ernn_bwd = gru();
  v.W_ha = next(); v.b_a = next();
  v.att_W = next(); v.att_b = next(); v.att_u = next();
  v.seq_fwd = gru();
  v.seq_bwd = gru();
  v.W_ho = next(); v.b_o = next();
  v.sm_W = next(); v.sm_b = next();
  return v;
}

template <class T>
Tensor<T> pack_images(std::span<const EpochImage* const> images) {
  const std::size_t n = images.size();
  Tensor<T> out = Tensor<T>::matrix(kFrames * n, kFreqBins);
  for (std::size_t e = 0; e < n; ++e) {
    const auto& img = *images[e];
    for (std::size_t t = 0; t < kFrames; ++t) {
      T* row = out.data() + (t * n + e) * kFreqBins;
      for (std::size_t f = 0; f < kFreqBins; ++f) row[f] = static_cast<T>(img.at(f, t));
    }
  }
  return out;
}

template <class T>
Var gru_step(Graph<T>& g, Var x, Var h_prev, const GruVars& p) {
  const Var z = g.sigmoid(g.add(g.add_bias(g.matmul(x, p.Wz), p.bz), g.matmul(h_prev, p.Uz)));
  const Var r = g.sigmoid(g.add(g.add_bias(g.matmul(x, p.Wr), p.br), g.matmul(h_prev, p.Ur)));
  const Var cand =
      g.tanh(g.add(g.add_bias(g.matmul(x, p.Wh), p.bh), g.mul(r, g.matmul(h_prev, p.Uh))));
  return g.add(h_prev, g.mul(z, g.sub(cand, h_prev)));
}

template <class T>
std::vector<Var> gru_scan(Graph<T>& g, Var inputs, std::size_t steps, std::size_t batch,
                          const GruVars& p, bool reverse) {
  const std::size_t hidden = g.value(p.Uz).rows();
  if (g.value(inputs).rows() != steps * batch) {
    throw Error(ErrorKind::ShapeMismatch,
                "gru_scan: input " + shape_string(g.value(inputs).shape()) + " for " +
                    std::to_string(steps) + " steps of " + std::to_string(batch) + " rows");
  }
  // Input projections for all steps at once; rows stay independent.
  const Var xz = g.add_bias(g.matmul(inputs, p.Wz), p.bz);
  const Var xr = g.add_bias(g.matmul(inputs, p.Wr), p.br);
  const Var xh = g.add_bias(g.matmul(inputs, p.Wh), p.bh);
  std::vector<Var> states(steps);
  Var h = g.constant(Tensor<T>::matrix(batch, hidden));
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    const std::size_t r0 = t * batch, r1 = r0 + batch;
    const Var z = g.sigmoid(g.add(g.slice_rows(xz, r0, r1), g.matmul(h, p.Uz)));
    const Var r = g.sigmoid(g.add(g.slice_rows(xr, r0, r1), g.matmul(h, p.Ur)));
    const Var cand = g.tanh(g.add(g.slice_rows(xh, r0, r1), g.mul(r, g.matmul(h, p.Uh))));
    h = g.add(h, g.mul(z, g.sub(cand, h)));
    states[t] = h;
  }
  return states;
}

template <class T>
Var filterbank_apply(Graph<T>& g, Var frames, Var V) {
  return g.matmul(frames, g.softplus(V));
}

template <class T>
Var ernn_encode(Graph<T>& g, const ModelVars& v, Var fb_out, std::size_t n_frames, std::size_t n_epochs) {
  const auto fwd = gru_scan(g, fb_out, n_frames, n_epochs, v.ernn_fwd, false);
  const auto bwd = gru_scan(g, fb_out, n_frames, n_epochs, v.ernn_bwd, true);
  const Var hb = g.concat_rows(bwd);
  const Var hf = g.concat_rows(fwd);
  return g.add_bias(g.matmul(g.concat_cols({hb, hf}), v.W_ha), v.b_a);
}

template <class T>
Attended attention_pool(Graph<T>& g, const ModelVars& v, Var encoded, std::size_t n_frames,
                        std::size_t n_epochs) {
  const Var proj = g.tanh(g.add_bias(g.matmul(encoded, v.att_W), v.att_b));
  const Var scores = g.matmul(proj, g.transpose(v.att_u));  // (T*n) x 1
  // Row t*n + e -> (t, e); normalize over t within each epoch column.
  const Var alpha_tn = g.softmax(g.reshape(scores, n_frames, n_epochs), 0);
  const Var alpha = g.transpose(alpha_tn);
  std::vector<Var> items(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    items[t] = g.slice_rows(encoded, t * n_epochs, (t + 1) * n_epochs);
  }
  return {g.weighted_sum(alpha, items), alpha};
}

template <class T>
Var arnn_forward(Graph<T>& g, const ModelVars& v, Var packed, std::size_t n_frames,
                 std::size_t n_epochs, const Dropout* dropout) {
  Var fb = filterbank_apply(g, packed, v.fb_V);
  if (dropout && dropout->rate > 0.0) {
    const auto& F = g.value(fb);
    fb = g.dropout(fb, Graph<T>::dropout_mask(F.rows(), F.cols(), dropout->rate, *dropout->rng));
  }
  const Var encoded = ernn_encode(g, v, fb, n_frames, n_epochs);
  Var x = attention_pool(g, v, encoded, n_frames, n_epochs).pooled;
  if (dropout && dropout->rate > 0.0) {
    const auto& X = g.value(x);
    x = g.dropout(x, Graph<T>::dropout_mask(X.rows(), X.cols(), dropout->rate, *dropout->rng));
  }
  return x;
}

template <class T>
Var seqrnn_forward(Graph<T>& g, const ModelVars& v, Var features, std::size_t seq_len,
                   std::size_t batch) {
  const auto fwd = gru_scan(g, features, seq_len, batch, v.seq_fwd, false);
  const auto bwd = gru_scan(g, features, seq_len, batch, v.seq_bwd, true);
  const Var hb = g.concat_rows(bwd);
  const Var hf = g.concat_rows(fwd);
  return g.add_bias(g.matmul(g.concat_cols({hb, hf}), v.W_ho), v.b_o);
}

namespace detail {

template <class T>
Var head(Graph<T>& g, const ModelVars& v, Var features, std::size_t seq_len, std::size_t batch,
         const Dropout* dropout, SeqMode mode) {
  Var o = mode == SeqMode::Full ? seqrnn_forward(g, v, features, seq_len, batch) : features;
  if (dropout && dropout->rate > 0.0) {
    const auto& O = g.value(o);
    o = g.dropout(o, Graph<T>::dropout_mask(O.rows(), O.cols(), dropout->rate, *dropout->rng));
  }
  return g.add_bias(g.matmul(o, v.sm_W), v.sm_b);
}

}  // namespace detail

template <class T>
Var forward_logits(Graph<T>& g, const ModelVars& v, Var packed, std::size_t n_frames, std::size_t seq_len,
                   std::size_t batch, const Dropout* dropout, SeqMode mode) {
  const Var x = arnn_forward(g, v, packed, n_frames, seq_len * batch, dropout);
  return detail::head(g, v, x, seq_len, batch, dropout, mode);
}

template <class T>
Var logits_from_features(Graph<T>& g, const ModelVars& v, Var features, std::size_t seq_len,
                         std::size_t batch, SeqMode mode) {
  return detail::head(g, v, features, seq_len, batch, nullptr, mode);
}

template <class T>
Var sequence_loss(Graph<T>& g, const ModelVars& v, const std::vector<bool>& trainable, Var logits,
                  const Tensor<T>& targets, std::size_t seq_len, double lambda) {
  Var loss = g.scale(g.cross_entropy(logits, targets), 1.0 / static_cast<double>(seq_len));
  if (lambda > 0.0) {
    Var reg;
    bool any = false;
    for (std::size_t i = 0; i < v.all.size(); ++i) {
      if (!trainable.empty() && !trainable[i]) continue;
      const Var sq = g.l2_norm_squared(v.all[i]);
      reg = any ? g.add(reg, sq) : sq;
      any = true;
    }
    if (any) loss = g.add(loss, g.scale(reg, lambda / 2.0));
  }
  return loss;
}

}  // namespace seqsleep
