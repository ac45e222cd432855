#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqsleep/dataio.hpp"
#include "seqsleep/numerics/graph.hpp"
#include "seqsleep/numerics/tensor.hpp"
#include "seqsleep/spectrogram.hpp"

namespace seqsleep {

struct HyperParams {
  std::size_t n_freq = kFreqBins;    // F
  std::size_t n_filters = 32;        // M, must be < F
  std::size_t ernn_hidden = 64;      // per direction
  std::size_t attention_size = 64;
  std::size_t seqrnn_hidden = 64;    // per direction
  std::size_t seq_len = 20;          // L
  double dropout_rate = 0.25;
  double lambda = 1e-3;
  std::size_t n_classes = kNumStages;

  void validate() const;
  std::size_t arnn_width() const { return 2 * ernn_hidden; }
  std::size_t seqrnn_width() const { return 2 * seqrnn_hidden; }
};

struct ParamSpec {
  std::string name;
  Shape shape;
};

// Canonical parameter groups in checkpoint order. Matrices act on row
// vectors (x * W), so input matrices are (in x hidden).
std::vector<ParamSpec> canonical_layout(const HyperParams& hp);

// Named parameter tensors in canonical order.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const HyperParams& hp);  // all zeros

  const HyperParams& hyper() const { return hp_; }
  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  Tensor<float>& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor<float>& tensor(std::size_t i) const { return tensors_[i]; }

  // Throws InvalidArgument for a name outside the canonical layout.
  std::size_t index_of(const std::string& name) const;
  Tensor<float>& at(const std::string& name) { return tensors_[index_of(name)]; }
  const Tensor<float>& at(const std::string& name) const { return tensors_[index_of(name)]; }

  std::size_t parameter_count() const;

 private:
  HyperParams hp_;
  std::vector<std::string> names_;
  std::vector<Tensor<float>> tensors_;
};

// Byte-level equality of two tensors (distinguishes -0 from +0).
bool bitwise_equal(const Tensor<float>& a, const Tensor<float>& b);
bool bitwise_equal(const ModelParams& a, const ModelParams& b);

// Glorot-uniform matrices, zero biases except the update-gate bias (1.0),
// and a filterbank whose softplus approximates M triangular filters
// linearly spaced over 0-50 Hz.
ModelParams initialize(const HyperParams& hp, std::uint64_t seed);

// Triangular filterbank (F x M) used for the initialization above.
Tensor<float> triangular_filterbank(std::size_t n_freq, std::size_t n_filters);

// ---- graph construction --------------------------------------------------

struct GruVars {
  Var Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
};

struct ModelVars {
  Var fb_V;
  GruVars ernn_fwd, ernn_bwd;
  Var W_ha, b_a;
  Var att_W, att_b, att_u;
  GruVars seq_fwd, seq_bwd;
  Var W_ho, b_o;
  Var sm_W, sm_b;
  std::vector<Var> all;  // canonical order
};

// Dropout configuration for train mode. A null pointer means inference.
struct Dropout {
  double rate = 0.0;
  Rng* rng = nullptr;
};

enum class SeqMode { Full, IdentityAblation };

// Binds parameters as graph leaves. Entries with trainable[i] == false become
// constants and receive no gradient; an empty vector means all trainable.
template <class T>
ModelVars bind_params(Graph<T>& g, const ModelParams& params, const std::vector<bool>& trainable = {});

// Packs images so that row (t * n_epochs + n) holds frame t of image n.
// Each entry of `images` is F x T row-major (frequency rows).
template <class T>
Tensor<T> pack_images(std::span<const EpochImage* const> images);
Tensor<float> pack_images(std::span<const EpochImage> images);

// One GRU step; z, r gates, candidate with the reset gate applied to the
// recurrent term, h = (1 - z) * h_prev + z * candidate.
template <class T>
Var gru_step(Graph<T>& g, Var x, Var h_prev, const GruVars& p);

// Runs a GRU over `steps` blocks of `batch` rows of `inputs`, from zero state.
// Returned states are in natural time order whatever the direction.
template <class T>
std::vector<Var> gru_scan(Graph<T>& g, Var inputs, std::size_t steps, std::size_t batch,
                          const GruVars& p, bool reverse);

// Frames (rows x F) times softplus(V) (F x M).
template <class T>
Var filterbank_apply(Graph<T>& g, Var frames, Var V);

// Bidirectional epoch-level encoding; a_t = W_ha [h_b_t ; h_f_t] + b_a for
// all t at once, returned as (T * n x 2H) in the packed row order.
template <class T>
Var ernn_encode(Graph<T>& g, const ModelVars& v, Var fb_out, std::size_t n_frames, std::size_t n_epochs);

struct Attended {
  Var pooled;   // n x D
  Var weights;  // n x T
};

// Additive attention: e_t = u^T tanh(W a_t + b), alpha = softmax_t(e),
// pooled = sum_t alpha_t a_t.
template <class T>
Attended attention_pool(Graph<T>& g, const ModelVars& v, Var encoded, std::size_t n_frames,
                        std::size_t n_epochs);

// Filterbank -> eRNN -> attention for n_epochs packed images. Returns n x 2H.
template <class T>
Var arnn_forward(Graph<T>& g, const ModelVars& v, Var packed, std::size_t n_frames,
                 std::size_t n_epochs, const Dropout* dropout);

// Sequence-level bidirectional GRU over features laid out as row i*B + b.
// Returns o as (L * B x 2Hs).
template <class T>
Var seqrnn_forward(Graph<T>& g, const ModelVars& v, Var features, std::size_t seq_len,
                   std::size_t batch);

// Logits (L * B x C) for B sequences of L packed epochs.
template <class T>
Var forward_logits(Graph<T>& g, const ModelVars& v, Var packed, std::size_t n_frames, std::size_t seq_len,
                   std::size_t batch, const Dropout* dropout, SeqMode mode = SeqMode::Full);

// Logits from precomputed ARNN features (L * B x 2H), inference mode.
template <class T>
Var logits_from_features(Graph<T>& g, const ModelVars& v, Var features, std::size_t seq_len,
                         std::size_t batch, SeqMode mode = SeqMode::Full);

// Cross-entropy summed over sequences and positions, divided by L, plus
// (lambda/2) times the squared norm of the trainable parameters.
template <class T>
Var sequence_loss(Graph<T>& g, const ModelVars& v, const std::vector<bool>& trainable, Var logits,
                  const Tensor<T>& targets, std::size_t seq_len, double lambda);

// ---- tensor-level conveniences --------------------------------------------

// Row-wise softmax of a logit matrix.
Tensor<float> softmax_rows(const Tensor<float>& logits);

// Probabilities (n x C) for class logits o * W_sm + b_sm.
Tensor<float> classify(const ModelParams& params, const Tensor<float>& outputs);

// ARNN features (n x 2H) for a set of images, inference mode. Rows are
// computed independently, so chunking does not change the result.
Tensor<float> arnn_features(const ModelParams& params, std::span<const EpochImage> images,
                            std::size_t chunk = 256);

// Class probabilities for B windows of L epochs given their features laid
// out as row i*B + b. Returns (L * B x C) in the same layout.
Tensor<float> window_probabilities(const ModelParams& params, const Tensor<float>& features,
                                   std::size_t seq_len, std::size_t batch);

}  // namespace seqsleep

#include "seqsleep/network_impl.hpp"
