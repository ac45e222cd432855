#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "seqsleep/errors.hpp"
#include "seqsleep/numerics/tensor.hpp"
#include "seqsleep/rng.hpp"

namespace seqsleep {

// Handle to a node in a Graph. Carries the owning graph's serial so that a
// handle from one graph cannot be used on another.
struct Var {
  std::size_t id = std::numeric_limits<std::size_t>::max();
  std::uint64_t graph = 0;
};

namespace detail {
inline std::uint64_t next_graph_serial() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}
}  // namespace detail

// Tape-based reverse-mode differentiation over 2-D tensors. Nodes are
// appended in evaluation order, so the tape is already topologically sorted
// and backward() walks it in reverse. Values are stored as T; every reduction
// accumulates in double.
template <class T>
class Graph {
 public:
  using Acc = double;

  Graph() : serial_(detail::next_graph_serial()) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  void set_check_finite(bool on) { check_finite_ = on; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor<T> value) { return push(as_matrix(std::move(value)), false, "constant"); }
  Var parameter(Tensor<T> value) { return push(as_matrix(std::move(value)), true, "parameter"); }

  const Tensor<T>& value(Var v) const { return node(v).value; }

  // Gradient of the last backward() target with respect to v. Empty-shaped
  // zero tensor when no gradient reached v.
  Tensor<T> grad(Var v) const {
    const auto& n = node(v);
    if (n.grad.size() == 0) return Tensor<T>(n.value.shape(), T{0});
    return n.grad;
  }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  // ---- forward ops -------------------------------------------------------

  Var matmul(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.cols() != B.rows()) mismatch("matmul", A, B);
    const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
    Tensor<T> C = Tensor<T>::matrix(n, m);
    std::vector<Acc> acc(m);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const T* arow = A.data() + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const Acc av = arow[p];
        if (av == 0.0) continue;
        const T* brow = B.data() + p * m;
        for (std::size_t j = 0; j < m; ++j) acc[j] += av * static_cast<Acc>(brow[j]);
      }
      T* crow = C.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] = static_cast<T>(acc[j]);
    }
    return push_op(std::move(C), {a, b}, "matmul", [this, a, b, n, k, m](const Tensor<T>& g) {
      const auto& A = value(a);
      const auto& B = value(b);
      if (wants(a)) {
        auto& gA = grad_ref(a);
        for (std::size_t i = 0; i < n; ++i) {
          const T* grow = g.data() + i * m;
          for (std::size_t p = 0; p < k; ++p) {
            const T* brow = B.data() + p * m;
            Acc s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += static_cast<Acc>(grow[j]) * brow[j];
            gA[i * k + p] += static_cast<T>(s);
          }
        }
      }
      if (wants(b)) {
        std::vector<Acc> acc(k * m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const T* arow = A.data() + i * k;
          const T* grow = g.data() + i * m;
          for (std::size_t p = 0; p < k; ++p) {
            const Acc av = arow[p];
            if (av == 0.0) continue;
            Acc* dst = acc.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) dst[j] += av * static_cast<Acc>(grow[j]);
          }
        }
        auto& gB = grad_ref(b);
        for (std::size_t i = 0; i < k * m; ++i) gB[i] += static_cast<T>(acc[i]);
      }
    });
  }

  // Adds a 1 x m bias row to every row of a (n x m).
  Var add_bias(Var a, Var bias) {
    const auto& A = value(a);
    const auto& b = value(bias);
    if (b.rows() != 1 || b.cols() != A.cols()) mismatch("add_bias", A, b);
    Tensor<T> out = A;
    const std::size_t n = A.rows(), m = A.cols();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += b[j];
    }
    return push_op(std::move(out), {a, bias}, "add_bias", [this, a, bias, n, m](const Tensor<T>& g) {
      if (wants(a)) add_into(grad_ref(a), g);
      if (wants(bias)) {
        auto& gb = grad_ref(bias);
        for (std::size_t j = 0; j < m; ++j) {
          Acc s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += g[i * m + j];
          gb[j] += static_cast<T>(s);
        }
      }
    });
  }

  Var add(Var a, Var b) {
    same_shape("add", a, b);
    Tensor<T> out = value(a);
    const auto& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
    return push_op(std::move(out), {a, b}, "add", [this, a, b](const Tensor<T>& g) {
      if (wants(a)) add_into(grad_ref(a), g);
      if (wants(b)) add_into(grad_ref(b), g);
    });
  }

  Var sub(Var a, Var b) {
    same_shape("sub", a, b);
    Tensor<T> out = value(a);
    const auto& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
    return push_op(std::move(out), {a, b}, "sub", [this, a, b](const Tensor<T>& g) {
      if (wants(a)) add_into(grad_ref(a), g);
      if (wants(b)) {
        auto& gb = grad_ref(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }

  Var mul(Var a, Var b) {
    same_shape("mul", a, b);
    Tensor<T> out = value(a);
    const auto& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
    return push_op(std::move(out), {a, b}, "mul", [this, a, b](const Tensor<T>& g) {
      const auto& A = value(a);
      const auto& B = value(b);
      if (wants(a)) {
        auto& ga = grad_ref(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
      }
      if (wants(b)) {
        auto& gb = grad_ref(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
      }
    });
  }

  Var scale(Var a, double c) {
    Tensor<T> out = value(a);
    for (auto& v : out.values()) v = static_cast<T>(v * c);
    return push_op(std::move(out), {a}, "scale", [this, a, c](const Tensor<T>& g) {
      auto& ga = grad_ref(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += static_cast<T>(g[i] * c);
    });
  }

  Var sigmoid(Var a) {
    return unary(a, "sigmoid", [](T x) { return T(1) / (T(1) + std::exp(-x)); },
                 [](T, T y) { return y * (T(1) - y); });
  }
  Var tanh(Var a) {
    return unary(a, "tanh", [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
  }
  Var relu(Var a) {
    return unary(a, "relu", [](T x) { return x > T(0) ? x : T(0); },
                 [](T x, T) { return x > T(0) ? T(1) : T(0); });
  }
  // log(1 + e^x), evaluated without overflow.
  Var softplus(Var a) {
    return unary(
        a, "softplus",
        [](T x) { return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
        [](T x, T) { return T(1) / (T(1) + std::exp(-x)); });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "concat_cols of nothing");
    const std::size_t n = value(parts[0]).rows();
    std::size_t total = 0;
    for (auto p : parts) {
      if (value(p).rows() != n) mismatch("concat_cols", value(parts[0]), value(p));
      total += value(p).cols();
    }
    Tensor<T> out = Tensor<T>::matrix(n, total);
    std::size_t off = 0;
    for (auto p : parts) {
      const auto& P = value(p);
      for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(P.data() + i * P.cols(), P.cols(), out.data() + i * total + off);
      }
      off += P.cols();
    }
    return push_op(std::move(out), parts, "concat_cols", [this, parts, n, total](const Tensor<T>& g) {
      std::size_t off = 0;
      for (auto p : parts) {
        const std::size_t c = value(p).cols();
        if (wants(p)) {
          auto& gp = grad_ref(p);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) gp[i * c + j] += g[i * total + off + j];
          }
        }
        off += c;
      }
    });
  }

  Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "concat_rows of nothing");
    const std::size_t m = value(parts[0]).cols();
    std::size_t total = 0;
    for (auto p : parts) {
      if (value(p).cols() != m) mismatch("concat_rows", value(parts[0]), value(p));
      total += value(p).rows();
    }
    Tensor<T> out = Tensor<T>::matrix(total, m);
    std::size_t off = 0;
    for (auto p : parts) {
      const auto& P = value(p);
      std::copy(P.values().begin(), P.values().end(), out.data() + off * m);
      off += P.rows();
    }
    return push_op(std::move(out), parts, "concat_rows", [this, parts, m](const Tensor<T>& g) {
      std::size_t off = 0;
      for (auto p : parts) {
        const std::size_t r = value(p).rows();
        if (wants(p)) {
          auto& gp = grad_ref(p);
          for (std::size_t i = 0; i < r * m; ++i) gp[i] += g[off * m + i];
        }
        off += r;
      }
    });
  }

  // Rows [r0, r1).
  Var slice_rows(Var a, std::size_t r0, std::size_t r1) {
    const auto& A = value(a);
    if (r0 > r1 || r1 > A.rows()) {
      throw Error(ErrorKind::ShapeMismatch, "slice_rows [" + std::to_string(r0) + "," +
                                                std::to_string(r1) + ") of " + shape_string(A.shape()));
    }
    const std::size_t m = A.cols();
    Tensor<T> out = Tensor<T>::matrix(r1 - r0, m);
    std::copy(A.data() + r0 * m, A.data() + r1 * m, out.data());
    return push_op(std::move(out), {a}, "slice_rows", [this, a, r0, r1, m](const Tensor<T>& g) {
      auto& ga = grad_ref(a);
      for (std::size_t i = 0; i < (r1 - r0) * m; ++i) ga[r0 * m + i] += g[i];
    });
  }

  // Columns [c0, c1).
  Var slice_cols(Var a, std::size_t c0, std::size_t c1) {
    const auto& A = value(a);
    if (c0 > c1 || c1 > A.cols()) {
      throw Error(ErrorKind::ShapeMismatch, "slice_cols [" + std::to_string(c0) + "," +
                                                std::to_string(c1) + ") of " + shape_string(A.shape()));
    }
    const std::size_t n = A.rows(), m = A.cols(), w = c1 - c0;
    Tensor<T> out = Tensor<T>::matrix(n, w);
    for (std::size_t i = 0; i < n; ++i) std::copy_n(A.data() + i * m + c0, w, out.data() + i * w);
    return push_op(std::move(out), {a}, "slice_cols", [this, a, c0, n, m, w](const Tensor<T>& g) {
      auto& ga = grad_ref(a);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < w; ++j) ga[i * m + c0 + j] += g[i * w + j];
      }
    });
  }

  // Softmax along axis 1 (within each row) or axis 0 (within each column).
  Var softmax(Var a, int axis = 1) {
    const auto& A = value(a);
    if (axis != 0 && axis != 1) throw Error(ErrorKind::ShapeMismatch, "softmax axis must be 0 or 1");
    const std::size_t n = A.rows(), m = A.cols();
    // Lines of the reduction: stride between elements and between lines.
    const std::size_t lines = axis == 1 ? n : m;
    const std::size_t len = axis == 1 ? m : n;
    const std::size_t step = axis == 1 ? 1 : m;
    const std::size_t line_step = axis == 1 ? m : 1;
    Tensor<T> out(A.shape());
    for (std::size_t l = 0; l < lines; ++l) {
      const std::size_t base = l * line_step;
      T mx = A[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, A[base + j * step]);
      Acc s = 0.0;
      for (std::size_t j = 0; j < len; ++j) s += std::exp(static_cast<Acc>(A[base + j * step]) - mx);
      for (std::size_t j = 0; j < len; ++j) {
        out[base + j * step] = static_cast<T>(std::exp(static_cast<Acc>(A[base + j * step]) - mx) / s);
      }
    }
    const Var self{nodes_.size(), serial_};
    return push_op(std::move(out), {a}, "softmax",
                   [this, a, self, lines, len, step, line_step](const Tensor<T>& g) {
                     const auto& Y = value(self);
                     auto& ga = grad_ref(a);
                     for (std::size_t l = 0; l < lines; ++l) {
                       const std::size_t base = l * line_step;
                       Acc dot = 0.0;
                       for (std::size_t j = 0; j < len; ++j) {
                         dot += static_cast<Acc>(g[base + j * step]) * Y[base + j * step];
                       }
                       for (std::size_t j = 0; j < len; ++j) {
                         const auto idx = base + j * step;
                         ga[idx] += static_cast<T>(Y[idx] * (g[idx] - dot));
                       }
                     }
                   });
  }

  // out(n, :) = sum_t weights(n, t) * items[t](n, :).
  Var weighted_sum(Var weights, const std::vector<Var>& items) {
    const auto& W = value(weights);
    if (items.size() != W.cols()) {
      throw Error(ErrorKind::ShapeMismatch, "weighted_sum: weights " + shape_string(W.shape()) +
                                                " for " + std::to_string(items.size()) + " items");
    }
    const std::size_t n = W.rows();
    const std::size_t d = value(items.at(0)).cols();
    for (auto it : items) {
      const auto& I = value(it);
      if (I.rows() != n || I.cols() != d) mismatch("weighted_sum", W, I);
    }
    const std::size_t tt = items.size();
    Tensor<T> out = Tensor<T>::matrix(n, d);
    std::vector<Acc> acc(d);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t t = 0; t < tt; ++t) {
        const Acc w = W[i * tt + t];
        const T* row = value(items[t]).data() + i * d;
        for (std::size_t j = 0; j < d; ++j) acc[j] += w * row[j];
      }
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] = static_cast<T>(acc[j]);
    }
    std::vector<Var> parents = items;
    parents.push_back(weights);
    return push_op(std::move(out), parents, "weighted_sum",
                   [this, weights, items, n, d, tt](const Tensor<T>& g) {
                     const auto& W = value(weights);
                     if (wants(weights)) {
                       auto& gw = grad_ref(weights);
                       for (std::size_t t = 0; t < tt; ++t) {
                         const auto& I = value(items[t]);
                         for (std::size_t i = 0; i < n; ++i) {
                           Acc s = 0.0;
                           for (std::size_t j = 0; j < d; ++j) {
                             s += static_cast<Acc>(g[i * d + j]) * I[i * d + j];
                           }
                           gw[i * tt + t] += static_cast<T>(s);
                         }
                       }
                     }
                     for (std::size_t t = 0; t < tt; ++t) {
                       if (!wants(items[t])) continue;
                       auto& gi = grad_ref(items[t]);
                       for (std::size_t i = 0; i < n; ++i) {
                         const T w = W[i * tt + t];
                         for (std::size_t j = 0; j < d; ++j) gi[i * d + j] += w * g[i * d + j];
                       }
                     }
                   });
  }

  // Same values, new (rows, cols) shape.
  Var reshape(Var a, std::size_t rows, std::size_t cols) {
    const auto& A = value(a);
    if (rows * cols != A.size()) {
      throw Error(ErrorKind::ShapeMismatch, "reshape " + shape_string(A.shape()) + " to [" +
                                                std::to_string(rows) + "x" + std::to_string(cols) + "]");
    }
    Tensor<T> out({rows, cols}, A.storage());
    return push_op(std::move(out), {a}, "reshape", [this, a](const Tensor<T>& g) {
      add_into(grad_ref(a), g);
    });
  }

  Var transpose(Var a) {
    const auto& A = value(a);
    const std::size_t n = A.rows(), m = A.cols();
    Tensor<T> out = Tensor<T>::matrix(m, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) out[j * n + i] = A[i * m + j];
    }
    return push_op(std::move(out), {a}, "transpose", [this, a, n, m](const Tensor<T>& g) {
      auto& ga = grad_ref(a);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += g[j * n + i];
      }
    });
  }

  // Inverted dropout: mask entries are 0 or 1/(1-rate), see dropout_mask().
  Var dropout(Var a, const Tensor<T>& mask) {
    const auto& A = value(a);
    if (mask.size() != A.size()) mismatch("dropout", A, mask);
    Tensor<T> out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return push_op(std::move(out), {a}, "dropout", [this, a, mask](const Tensor<T>& g) {
      auto& ga = grad_ref(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
    });
  }

  static Tensor<T> dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Tensor<T> mask = Tensor<T>::matrix(rows, cols);
    const T keep = static_cast<T>(1.0 / (1.0 - rate));
    for (auto& v : mask.values()) v = rng.uniform() < rate ? T(0) : keep;
    return mask;
  }

  // Scalar sum of squares.
  Var l2_norm_squared(Var a) {
    const auto& A = value(a);
    Acc s = 0.0;
    for (auto v : A.values()) s += static_cast<Acc>(v) * v;
    return push_op(Tensor<T>::scalar(static_cast<T>(s)), {a}, "l2_norm_squared",
                   [this, a](const Tensor<T>& g) {
                     const auto& A = value(a);
                     auto& ga = grad_ref(a);
                     for (std::size_t i = 0; i < A.size(); ++i) ga[i] += T(2) * A[i] * g[0];
                   });
  }

  // Scalar  -sum_n sum_c targets(n,c) * log_softmax(logits)(n,c), computed from
  // log-softmax directly so no probability is ever passed through log().
  Var cross_entropy(Var logits, const Tensor<T>& targets) {
    const auto& Z = value(logits);
    if (targets.rows() != Z.rows() || targets.cols() != Z.cols()) {
      mismatch("cross_entropy", Z, targets);
    }
    const std::size_t n = Z.rows(), c = Z.cols();
    Acc total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const T* z = Z.data() + i * c;
      const T mx = *std::max_element(z, z + c);
      Acc s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += std::exp(static_cast<Acc>(z[j]) - mx);
      const Acc lse = mx + std::log(s);
      for (std::size_t j = 0; j < c; ++j) total -= static_cast<Acc>(targets[i * c + j]) * (z[j] - lse);
    }
    return push_op(Tensor<T>::scalar(static_cast<T>(total)), {logits}, "cross_entropy",
                   [this, logits, targets, n, c](const Tensor<T>& g) {
                     const auto& Z = value(logits);
                     auto& gz = grad_ref(logits);
                     for (std::size_t i = 0; i < n; ++i) {
                       const T* z = Z.data() + i * c;
                       const T mx = *std::max_element(z, z + c);
                       Acc s = 0.0, ysum = 0.0;
                       for (std::size_t j = 0; j < c; ++j) {
                         s += std::exp(static_cast<Acc>(z[j]) - mx);
                         ysum += targets[i * c + j];
                       }
                       for (std::size_t j = 0; j < c; ++j) {
                         const Acc p = std::exp(static_cast<Acc>(z[j]) - mx) / s;
                         gz[i * c + j] += static_cast<T>(g[0] * (p * ysum - targets[i * c + j]));
                       }
                     }
                   });
  }

  // ---- reverse pass ------------------------------------------------------

  void backward(Var loss) {
    if (loss.graph != serial_ || loss.id >= nodes_.size()) {
      throw Error(ErrorKind::GraphNotEvaluated, "backward target is not a node of this graph");
    }
    if (node(loss).value.size() != 1) {
      throw Error(ErrorKind::ShapeMismatch,
                  "backward target must be scalar, got " + shape_string(node(loss).value.shape()));
    }
    for (auto& n : nodes_) n.grad = Tensor<T>();
    grad_ref(loss)[0] = T(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
      n.backward(n.grad);
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void(const Tensor<T>&)> backward;
  };

  static Tensor<T> as_matrix(Tensor<T> t) {
    if (t.rank() == 2) return t;
    const std::size_t n = t.size();
    return Tensor<T>({t.rank() == 1 ? std::size_t{1} : n, t.rank() == 1 ? n : 1},
                     std::move(t.storage()));
  }

  const Node& node(Var v) const {
    if (v.graph != serial_ || v.id >= nodes_.size()) {
      throw Error(ErrorKind::GraphNotEvaluated, "variable does not belong to this graph");
    }
    return nodes_[v.id];
  }

  bool wants(Var v) const { return nodes_[v.id].requires_grad; }

  Tensor<T>& grad_ref(Var v) {
    auto& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = Tensor<T>(n.value.shape(), T{0});
    return n.grad;
  }

  static void add_into(Tensor<T>& dst, const Tensor<T>& src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
  }

  [[noreturn]] static void mismatch(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    throw Error(ErrorKind::ShapeMismatch,
                std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }

  void same_shape(const char* op, Var a, Var b) const {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols()) mismatch(op, A, B);
  }

  Var push(Tensor<T> value, bool requires_grad, const char* op) {
    if (check_finite_) {
      for (auto v : value.values()) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, std::string("output of ") + op);
      }
    }
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad, nullptr});
    return Var{nodes_.size() - 1, serial_};
  }

  template <class F>
  Var push_op(Tensor<T> value, const std::vector<Var>& parents, const char* op, F&& backward) {
    bool rg = false;
    for (auto p : parents) rg = rg || node(p).requires_grad;
    Var v = push(std::move(value), rg, op);
    if (rg) nodes_.back().backward = std::forward<F>(backward);
    return v;
  }

  template <class F, class D>
  Var unary(Var a, const char* op, F f, D df) {
    const auto& A = value(a);
    Tensor<T> out(A.shape());
    for (std::size_t i = 0; i < A.size(); ++i) out[i] = f(A[i]);
    const Var self{nodes_.size(), serial_};
    return push_op(std::move(out), {a}, op, [this, a, self, df](const Tensor<T>& g) {
      const auto& X = value(a);
      const auto& Y = value(self);
      auto& ga = grad_ref(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(X[i], Y[i]);
    });
  }

  std::vector<Node> nodes_;
  std::uint64_t serial_;
  bool check_finite_ = true;
};

}  // namespace seqsleep
