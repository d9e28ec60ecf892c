#pragma once
// Neural building blocks: embedding lookup, dense, 1D convolution, separable
// 1D convolution, max pooling, inverted dropout, LSTM, and the bidirectional
// wrapper. Rank-3 activations are (batch, time, channels).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "textclf/rng.hpp"
#include "textclf/tensor.hpp"

namespace textclf::nn {

enum class Activation { Linear, Relu, Sigmoid };

template <typename S>
Tensor<S> apply_activation(const Tensor<S>& x, Activation act) {
  switch (act) {
    case Activation::Linear: return x;
    case Activation::Relu: return relu(x);
    case Activation::Sigmoid: return sigmoid(x);
  }
  throw std::logic_error("unknown activation");
}

/// Round-half-up of vocab_size^(1/4), minimum 1. Exact integer arithmetic:
/// the result is the unique r with (2r-1)^4 <= 16*v < (2r+1)^4.
inline std::int64_t embedding_dim(std::int64_t vocab_size) {
  if (vocab_size < 1) throw std::invalid_argument("embedding_dim: vocab_size must be positive");
  auto fourth = [](std::int64_t x) {
    const auto xx = static_cast<unsigned long long>(x);
    return xx * xx * xx * xx;
  };
  std::int64_t r = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(vocab_size), 0.25)));
  if (r < 1) r = 1;
  const auto target = 16ULL * static_cast<unsigned long long>(vocab_size);
  while (fourth(2 * r + 1) <= target) ++r;
  while (r > 1 && fourth(2 * r - 1) > target) --r;
  return r;
}

inline double glorot_bound(std::int64_t fan_in, std::int64_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename S>
Tensor<S> init_uniform(Shape shape, RngStream& rng, double bound) {
  auto t = Tensor<S>::zeros(std::move(shape));
  rng.fill_uniform(t.values_mut(), -bound, bound);
  t.set_requires_grad(true);
  return t;
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

/// Gathers rows of the table; backward scatter-adds into it. The row for the
/// pad index trains like any other (padding is not masked).
template <typename S>
Tensor<S> gather_rows(const Tensor<S>& table, std::span<const std::int32_t> indices,
                      std::int64_t n, std::int64_t len) {
  if (table.rank() != 2) throw std::invalid_argument("gather_rows: table must be rank-2");
  if (static_cast<std::int64_t>(indices.size()) != n * len) {
    throw std::invalid_argument("gather_rows: index count does not match (n, len)");
  }
  const auto rows = table.dim(0), d = table.dim(1);
  const auto tn = table.node();
  std::vector<S> out(static_cast<std::size_t>(n * len * d));
  for (std::int64_t i = 0; i < n * len; ++i) {
    const std::int32_t idx = indices[static_cast<std::size_t>(i)];
    if (idx < 0 || idx >= rows) {
      throw std::invalid_argument("gather_rows: index " + std::to_string(idx) +
                                  " out of range [0, " + std::to_string(rows) + ")");
    }
    const S* src = tn->value.data() + static_cast<std::int64_t>(idx) * d;
    std::copy(src, src + d, out.data() + i * d);
  }
  auto idx_copy = std::make_shared<std::vector<std::int32_t>>(indices.begin(), indices.end());
  return detail::make_result<S>(
      {n, len, d}, std::move(out), {tn}, [tn, idx_copy, n, len, d](detail::Node<S>& self) {
        if (!tn->requires_grad) return;
        tn->ensure_grad();
        for (std::int64_t i = 0; i < n * len; ++i) {
          const S* g = self.grad.data() + i * d;
          S* dst = tn->grad.data() +
                   static_cast<std::int64_t>((*idx_copy)[static_cast<std::size_t>(i)]) * d;
          for (std::int64_t j = 0; j < d; ++j) dst[j] += g[j];
        }
      });
}

template <typename S>
struct EmbeddingLayer {
  Tensor<S> table;  // (rows, d): row 0 = pad, row 1 = OOV, words from 2

  static EmbeddingLayer init(std::int64_t rows, std::int64_t d, RngStream& rng) {
    return EmbeddingLayer{init_uniform<S>({rows, d}, rng, 0.05)};
  }

  Tensor<S> forward(std::span<const std::int32_t> indices, std::int64_t n, std::int64_t len) const {
    return gather_rows(table, indices, n, len);
  }
};

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

template <typename S>
struct DenseLayer {
  Tensor<S> weight;  // (c_in, units)
  Tensor<S> bias;    // (units)
  Activation activation = Activation::Linear;

  static DenseLayer init(std::int64_t c_in, std::int64_t units, Activation act, RngStream& rng) {
    DenseLayer layer;
    layer.weight = init_uniform<S>({c_in, units}, rng, glorot_bound(c_in, units));
    layer.bias = Tensor<S>::zeros({units});
    layer.bias.set_requires_grad(true);
    layer.activation = act;
    return layer;
  }

  Tensor<S> forward(const Tensor<S>& x) const {
    return apply_activation(add(matmul(x, weight), bias), activation);
  }
};

// ---------------------------------------------------------------------------
// Convolution (valid padding, no stride)
// ---------------------------------------------------------------------------

/// Pre-activation 1D convolution via im2col + matmul:
///   out[s, t, j] = bias[j] + sum_{tau, c} x[s, t+tau, c] * kernels[tau, c, j]
template <typename S>
Tensor<S> conv1d_raw(const Tensor<S>& x, const Tensor<S>& kernels, const Tensor<S>& bias) {
  if (x.rank() != 3 || kernels.rank() != 3 || x.dim(2) != kernels.dim(1)) {
    throw std::invalid_argument("conv1d: incompatible shapes " + shape_str(x.shape()) + " and " +
                                shape_str(kernels.shape()));
  }
  const auto n = x.dim(0), len = x.dim(1), c_in = x.dim(2);
  const auto k = kernels.dim(0), c_out = kernels.dim(2);
  if (len < k) {
    throw std::invalid_argument("conv1d: input length " + std::to_string(len) +
                                " shorter than kernel width " + std::to_string(k));
  }
  const auto out_len = len - k + 1;
  const auto xn = x.node();
  const auto kn = kernels.node();
  const auto bn = bias.node();

  const auto col_rows = n * out_len;
  const auto col_cols = k * c_in;
  auto col = std::make_shared<std::vector<S>>(static_cast<std::size_t>(col_rows * col_cols));
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t t = 0; t < out_len; ++t) {
      S* dst = col->data() + (s * out_len + t) * col_cols;
      const S* src = xn->value.data() + (s * len + t) * c_in;
      std::copy(src, src + col_cols, dst);  // windows are contiguous in (time, channel)
    }
  }

  std::vector<S> out(static_cast<std::size_t>(col_rows * c_out));
  detail::MutMap<S> om(out.data(), col_rows, c_out);
  om.noalias() = detail::MatMap<S>(col->data(), col_rows, col_cols) *
                 detail::MatMap<S>(kn->value.data(), col_cols, c_out);
  om.rowwise() += Eigen::Map<const Eigen::RowVectorX<S>>(bn->value.data(), c_out);

  return detail::make_result<S>(
      {n, out_len, c_out}, std::move(out), {xn, kn, bn},
      [xn, kn, bn, col, n, len, c_in, k, c_out, out_len](detail::Node<S>& self) {
        const auto col_rows2 = n * out_len;
        const auto col_cols2 = k * c_in;
        detail::MatMap<S> g(self.grad.data(), col_rows2, c_out);
        if (kn->requires_grad) {
          kn->ensure_grad();
          detail::MutMap<S>(kn->grad.data(), col_cols2, c_out).noalias() +=
              detail::MatMap<S>(col->data(), col_rows2, col_cols2).transpose() * g;
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          Eigen::Map<Eigen::RowVectorX<S>>(bn->grad.data(), c_out) += g.colwise().sum();
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          std::vector<S> dcol(static_cast<std::size_t>(col_rows2 * col_cols2));
          detail::MutMap<S>(dcol.data(), col_rows2, col_cols2).noalias() =
              g * detail::MatMap<S>(kn->value.data(), col_cols2, c_out).transpose();
          for (std::int64_t s = 0; s < n; ++s) {
            for (std::int64_t t = 0; t < out_len; ++t) {
              const S* src = dcol.data() + (s * out_len + t) * col_cols2;
              S* dst = xn->grad.data() + (s * len + t) * c_in;
              for (std::int64_t j = 0; j < col_cols2; ++j) dst[j] += src[j];
            }
          }
        }
      });
}

/// Depthwise stage of a separable convolution: one width-k filter per input
/// channel, channels stay independent.
///   out[s, t, c] = sum_tau x[s, t+tau, c] * filters[tau, c]
template <typename S>
Tensor<S> depthwise_conv1d_raw(const Tensor<S>& x, const Tensor<S>& filters) {
  if (x.rank() != 3 || filters.rank() != 2 || x.dim(2) != filters.dim(1)) {
    throw std::invalid_argument("depthwise_conv1d: incompatible shapes " + shape_str(x.shape()) +
                                " and " + shape_str(filters.shape()));
  }
  const auto n = x.dim(0), len = x.dim(1), c = x.dim(2);
  const auto k = filters.dim(0);
  if (len < k) {
    throw std::invalid_argument("depthwise_conv1d: input length " + std::to_string(len) +
                                " shorter than kernel width " + std::to_string(k));
  }
  const auto out_len = len - k + 1;
  const auto xn = x.node();
  const auto fn = filters.node();
  std::vector<S> out(static_cast<std::size_t>(n * out_len * c), S(0));
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t t = 0; t < out_len; ++t) {
      S* dst = out.data() + (s * out_len + t) * c;
      for (std::int64_t tau = 0; tau < k; ++tau) {
        const S* src = xn->value.data() + (s * len + t + tau) * c;
        const S* w = fn->value.data() + tau * c;
        for (std::int64_t j = 0; j < c; ++j) dst[j] += src[j] * w[j];
      }
    }
  }
  return detail::make_result<S>(
      {n, out_len, c}, std::move(out), {xn, fn},
      [xn, fn, n, len, c, k, out_len](detail::Node<S>& self) {
        const bool gx = xn->requires_grad;
        const bool gf = fn->requires_grad;
        if (gx) xn->ensure_grad();
        if (gf) fn->ensure_grad();
        for (std::int64_t s = 0; s < n; ++s) {
          for (std::int64_t t = 0; t < out_len; ++t) {
            const S* g = self.grad.data() + (s * out_len + t) * c;
            for (std::int64_t tau = 0; tau < k; ++tau) {
              const S* src = xn->value.data() + (s * len + t + tau) * c;
              const S* w = fn->value.data() + tau * c;
              S* dx = gx ? xn->grad.data() + (s * len + t + tau) * c : nullptr;
              S* dw = gf ? fn->grad.data() + tau * c : nullptr;
              for (std::int64_t j = 0; j < c; ++j) {
                if (dx) dx[j] += g[j] * w[j];
                if (dw) dw[j] += g[j] * src[j];
              }
            }
          }
        }
      });
}

template <typename S>
struct Conv1DLayer {
  Tensor<S> kernels;  // (k, c_in, c_out)
  Tensor<S> bias;     // (c_out)
  Activation activation = Activation::Relu;

  static Conv1DLayer init(std::int64_t k, std::int64_t c_in, std::int64_t c_out, RngStream& rng,
                          Activation act = Activation::Relu) {
    Conv1DLayer layer;
    layer.kernels = init_uniform<S>({k, c_in, c_out}, rng, glorot_bound(k * c_in, k * c_out));
    layer.bias = Tensor<S>::zeros({c_out});
    layer.bias.set_requires_grad(true);
    layer.activation = act;
    return layer;
  }

  Tensor<S> forward(const Tensor<S>& x) const {
    return apply_activation(conv1d_raw(x, kernels, bias), activation);
  }
};

template <typename S>
struct SeparableConv1DLayer {
  Tensor<S> depthwise;  // (k, c_in)
  Tensor<S> pointwise;  // (c_in, c_out)
  Tensor<S> bias;       // (c_out)
  Activation activation = Activation::Relu;

  static SeparableConv1DLayer init(std::int64_t k, std::int64_t c_in, std::int64_t c_out,
                                   RngStream& rng, Activation act = Activation::Relu) {
    SeparableConv1DLayer layer;
    layer.depthwise = init_uniform<S>({k, c_in}, rng, glorot_bound(k, 1));
    layer.pointwise = init_uniform<S>({c_in, c_out}, rng, glorot_bound(c_in, c_out));
    layer.bias = Tensor<S>::zeros({c_out});
    layer.bias.set_requires_grad(true);
    layer.activation = act;
    return layer;
  }

  /// Depthwise then pointwise; equal to conv1d with the rank-1 factorized
  /// kernel K[tau, c, j] = depthwise[tau, c] * pointwise[c, j].
  Tensor<S> forward(const Tensor<S>& x) const {
    const auto n = x.dim(0);
    Tensor<S> dw = depthwise_conv1d_raw(x, depthwise);
    const auto out_len = dw.dim(1);
    const auto c_in = dw.dim(2);
    Tensor<S> flat = reshape(dw, {n * out_len, c_in});
    Tensor<S> mixed = add(matmul(flat, pointwise), bias);
    return apply_activation(reshape(mixed, {n, out_len, pointwise.dim(1)}), activation);
  }
};

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

/// Per-channel window max; gradient routes to the first maximal index.
template <typename S>
Tensor<S> maxpool1d(const Tensor<S>& x, std::int64_t width, std::int64_t stride) {
  if (x.rank() != 3) throw std::invalid_argument("maxpool1d: expected rank-3 input");
  if (width < 1 || stride < 1) throw std::invalid_argument("maxpool1d: width and stride must be positive");
  const auto n = x.dim(0), len = x.dim(1), c = x.dim(2);
  if (len < width) {
    throw std::invalid_argument("maxpool1d: input length " + std::to_string(len) +
                                " shorter than pool width " + std::to_string(width));
  }
  const auto out_len = (len - width) / stride + 1;
  const auto xn = x.node();
  std::vector<S> out(static_cast<std::size_t>(n * out_len * c));
  auto argmax = std::make_shared<std::vector<std::int32_t>>(out.size());
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t t = 0; t < out_len; ++t) {
      for (std::int64_t j = 0; j < c; ++j) {
        const std::int64_t base = t * stride;
        S best = xn->value[static_cast<std::size_t>((s * len + base) * c + j)];
        std::int32_t best_at = 0;
        for (std::int64_t tau = 1; tau < width; ++tau) {
          const S v = xn->value[static_cast<std::size_t>((s * len + base + tau) * c + j)];
          if (v > best) {
            best = v;
            best_at = static_cast<std::int32_t>(tau);
          }
        }
        const auto o = static_cast<std::size_t>((s * out_len + t) * c + j);
        out[o] = best;
        (*argmax)[o] = best_at;
      }
    }
  }
  return detail::make_result<S>(
      {n, out_len, c}, std::move(out), {xn},
      [xn, argmax, n, len, c, stride, out_len](detail::Node<S>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::int64_t s = 0; s < n; ++s) {
          for (std::int64_t t = 0; t < out_len; ++t) {
            for (std::int64_t j = 0; j < c; ++j) {
              const auto o = static_cast<std::size_t>((s * out_len + t) * c + j);
              const std::int64_t src = t * stride + (*argmax)[o];
              xn->grad[static_cast<std::size_t>((s * len + src) * c + j)] += self.grad[o];
            }
          }
        }
      });
}

/// Per-channel max over the whole time axis; (n, L, c) -> (n, c).
template <typename S>
Tensor<S> global_maxpool(const Tensor<S>& x) {
  if (x.rank() != 3) throw std::invalid_argument("global_maxpool: expected rank-3 input");
  const auto n = x.dim(0), len = x.dim(1), c = x.dim(2);
  const auto xn = x.node();
  std::vector<S> out(static_cast<std::size_t>(n * c));
  auto argmax = std::make_shared<std::vector<std::int32_t>>(out.size());
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t j = 0; j < c; ++j) {
      S best = xn->value[static_cast<std::size_t>((s * len) * c + j)];
      std::int32_t best_at = 0;
      for (std::int64_t t = 1; t < len; ++t) {
        const S v = xn->value[static_cast<std::size_t>((s * len + t) * c + j)];
        if (v > best) {
          best = v;
          best_at = static_cast<std::int32_t>(t);
        }
      }
      out[static_cast<std::size_t>(s * c + j)] = best;
      (*argmax)[static_cast<std::size_t>(s * c + j)] = best_at;
    }
  }
  return detail::make_result<S>(
      {n, c}, std::move(out), {xn}, [xn, argmax, n, len, c](detail::Node<S>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::int64_t s = 0; s < n; ++s) {
          for (std::int64_t j = 0; j < c; ++j) {
            const auto o = static_cast<std::size_t>(s * c + j);
            xn->grad[static_cast<std::size_t>((s * len + (*argmax)[o]) * c + j)] += self.grad[o];
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Dropout (inverted: survivors scaled by 1/(1-rate), evaluation is identity)
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> dropout_mask(Shape shape, double rate, RngStream& rng) {
  auto mask = Tensor<S>::zeros(std::move(shape));
  const S scale = static_cast<S>(1.0 / (1.0 - rate));
  for (auto& v : mask.values_mut()) v = rng.uniform() >= rate ? scale : S(0);
  return mask;
}

template <typename S>
Tensor<S> dropout(const Tensor<S>& x, double rate, bool training, RngStream* rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  if (rng == nullptr) throw std::invalid_argument("dropout: training mode needs a random stream");
  return mul(x, dropout_mask<S>(x.shape(), rate, *rng));
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

template <typename S>
struct LstmGateParams {
  Tensor<S> kernel;     // (c_in, h)
  Tensor<S> recurrent;  // (h, h)
  Tensor<S> bias;       // (h)
};

/// Standard cell: i = sig(xWi + hUi + bi), f = sig(...), g = tanh(...),
/// o = sig(...), c <- f*c + i*g, h <- o*tanh(c). Forget-gate bias starts at 1.
/// Input dropout masks x and recurrent dropout masks the h fed into the
/// gates; one mask each, fixed across all timesteps of a sequence.
template <typename S>
struct LSTMLayer {
  LstmGateParams<S> input, forget, cell, output;
  std::int64_t hidden = 0;
  double input_dropout_rate = 0.0;
  double recurrent_dropout_rate = 0.0;

  static LSTMLayer init(std::int64_t c_in, std::int64_t h, double input_dropout,
                        double recurrent_dropout, RngStream& rng) {
    LSTMLayer layer;
    layer.hidden = h;
    layer.input_dropout_rate = input_dropout;
    layer.recurrent_dropout_rate = recurrent_dropout;
    auto make_gate = [&](S bias_value) {
      LstmGateParams<S> gate;
      gate.kernel = init_uniform<S>({c_in, h}, rng, glorot_bound(c_in, h));
      gate.recurrent = init_uniform<S>({h, h}, rng, glorot_bound(h, h));
      gate.bias = Tensor<S>::filled({h}, bias_value);
      gate.bias.set_requires_grad(true);
      return gate;
    };
    layer.input = make_gate(S(0));
    layer.forget = make_gate(S(1));
    layer.cell = make_gate(S(0));
    layer.output = make_gate(S(0));
    return layer;
  }

  Tensor<S> forward(const Tensor<S>& x, bool return_sequences, bool training,
                    RngStream* rng) const {
    if (x.rank() != 3) throw std::invalid_argument("lstm: expected rank-3 input");
    const auto n = x.dim(0), len = x.dim(1), c_in = x.dim(2);
    const bool drop_in = training && input_dropout_rate > 0.0;
    const bool drop_rec = training && recurrent_dropout_rate > 0.0;
    if ((drop_in || drop_rec) && rng == nullptr) {
      throw std::invalid_argument("lstm: training dropout needs a random stream");
    }
    Tensor<S> mask_in, mask_rec;
    if (drop_in) mask_in = dropout_mask<S>({n, c_in}, input_dropout_rate, *rng);
    if (drop_rec) mask_rec = dropout_mask<S>({n, hidden}, recurrent_dropout_rate, *rng);

    Tensor<S> h = Tensor<S>::zeros({n, hidden});
    Tensor<S> c = Tensor<S>::zeros({n, hidden});
    std::vector<Tensor<S>> outputs;
    if (return_sequences) outputs.reserve(static_cast<std::size_t>(len));
    for (std::int64_t t = 0; t < len; ++t) {
      Tensor<S> xt = slice_time(x, t);
      if (drop_in) xt = mul(xt, mask_in);
      Tensor<S> hg = drop_rec ? mul(h, mask_rec) : h;
      auto gate_pre = [&](const LstmGateParams<S>& p) {
        return add(add(matmul(xt, p.kernel), matmul(hg, p.recurrent)), p.bias);
      };
      Tensor<S> gi = sigmoid(gate_pre(input));
      Tensor<S> gf = sigmoid(gate_pre(forget));
      Tensor<S> gg = tanh_act(gate_pre(cell));
      Tensor<S> go = sigmoid(gate_pre(output));
      c = add(mul(gf, c), mul(gi, gg));
      h = mul(go, tanh_act(c));
      if (return_sequences) outputs.push_back(h);
    }
    return return_sequences ? stack_time(outputs) : h;
  }
};

/// Runs one LSTM over the sequence as written and another over its reversal
/// (re-reversed for sequence output), concatenating features.
template <typename S>
struct BidirectionalLSTM {
  LSTMLayer<S> fwd, bwd;

  static BidirectionalLSTM init(std::int64_t c_in, std::int64_t h, double input_dropout,
                                double recurrent_dropout, RngStream& rng) {
    BidirectionalLSTM layer;
    layer.fwd = LSTMLayer<S>::init(c_in, h, input_dropout, recurrent_dropout, rng);
    layer.bwd = LSTMLayer<S>::init(c_in, h, input_dropout, recurrent_dropout, rng);
    return layer;
  }

  Tensor<S> forward(const Tensor<S>& x, bool return_sequences, bool training,
                    RngStream* rng) const {
    if (fwd.hidden != bwd.hidden) {
      throw std::invalid_argument("bidirectional: wrapped layers disagree on hidden size");
    }
    Tensor<S> forward_out = fwd.forward(x, return_sequences, training, rng);
    Tensor<S> reversed_in = reverse_time(x);
    Tensor<S> backward_out = bwd.forward(reversed_in, return_sequences, training, rng);
    if (return_sequences) backward_out = reverse_time(backward_out);
    return concat_last(forward_out, backward_out);
  }
};

}  // namespace textclf::nn
