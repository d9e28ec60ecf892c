#pragma once
// Template implementation for zoo.hpp (building and running models).

#include <stdexcept>

namespace textclf::zoo {

namespace detail_zoo {

inline std::string layer_prefix(std::size_t plan_index, LayerKind kind) {
  std::string idx = std::to_string(plan_index);
  if (idx.size() < 2) idx.insert(idx.begin(), '0');
  return "l" + idx + "." + layer_kind_name(kind);
}

}  // namespace detail_zoo

template <typename S>
Model<S> build(const ModelSpec& spec, std::uint64_t seed_init, std::uint64_t seed_stochastic) {
  if (spec.plan.empty()) {
    throw std::invalid_argument("build: '" + spec.model_id + "' is not a neural model id");
  }
  Model<S> model;
  model.spec = spec;
  model.stochastic = RngStream(seed_stochastic);
  RngStream init(seed_init);

  auto add_lstm_params = [&](const std::string& prefix, nn::LSTMLayer<S>& layer) {
    auto add_gate = [&](const char* gate, nn::LstmGateParams<S>& p) {
      model.params.emplace_back(prefix + "." + gate + ".kernel", p.kernel);
      model.params.emplace_back(prefix + "." + gate + ".recurrent", p.recurrent);
      model.params.emplace_back(prefix + "." + gate + ".bias", p.bias);
    };
    add_gate("input", layer.input);
    add_gate("forget", layer.forget);
    add_gate("cell", layer.cell);
    add_gate("output", layer.output);
  };

  for (std::size_t idx = 0; idx < spec.plan.size(); ++idx) {
    const LayerDesc& d = spec.plan[idx];
    const std::string prefix = detail_zoo::layer_prefix(idx, d.kind);
    switch (d.kind) {
      case LayerKind::Embedding: {
        auto layer = nn::EmbeddingLayer<S>::init(spec.vocab_size + 2, d.out_features, init);
        model.params.emplace_back(prefix + ".table", layer.table);
        model.layers.push_back(std::move(layer));
        break;
      }
      case LayerKind::Conv1D: {
        auto layer =
            nn::Conv1DLayer<S>::init(d.width, d.in_features, d.out_features, init, d.activation);
        model.params.emplace_back(prefix + ".kernels", layer.kernels);
        model.params.emplace_back(prefix + ".bias", layer.bias);
        model.layers.push_back(std::move(layer));
        break;
      }
      case LayerKind::SeparableConv1D: {
        auto layer = nn::SeparableConv1DLayer<S>::init(d.width, d.in_features, d.out_features,
                                                       init, d.activation);
        model.params.emplace_back(prefix + ".depthwise", layer.depthwise);
        model.params.emplace_back(prefix + ".pointwise", layer.pointwise);
        model.params.emplace_back(prefix + ".bias", layer.bias);
        model.layers.push_back(std::move(layer));
        break;
      }
      case LayerKind::Dense: {
        auto layer = nn::DenseLayer<S>::init(d.in_features, d.out_features, d.activation, init);
        model.params.emplace_back(prefix + ".weight", layer.weight);
        model.params.emplace_back(prefix + ".bias", layer.bias);
        model.layers.push_back(std::move(layer));
        break;
      }
      case LayerKind::Lstm: {
        auto layer = nn::LSTMLayer<S>::init(d.in_features, d.out_features, d.input_dropout,
                                            d.recurrent_dropout, init);
        add_lstm_params(prefix, layer);
        model.layers.push_back(std::move(layer));
        break;
      }
      case LayerKind::BiLstm: {
        auto layer = nn::BidirectionalLSTM<S>::init(d.in_features, d.out_features,
                                                    d.input_dropout, d.recurrent_dropout, init);
        add_lstm_params(prefix + ".fwd", layer.fwd);
        add_lstm_params(prefix + ".bwd", layer.bwd);
        model.layers.push_back(std::move(layer));
        break;
      }
      case LayerKind::MaxPool1D:
      case LayerKind::GlobalMaxPool:
      case LayerKind::Dropout:
      case LayerKind::Flatten:
        break;  // no parameters
    }
  }
  return model;
}

template <typename S>
Tensor<S> Model<S>::forward(std::span<const std::int32_t> sequences, std::int64_t n,
                            bool training) {
  if (static_cast<std::int64_t>(sequences.size()) != n * spec.max_len) {
    throw std::invalid_argument("forward: batch of " + std::to_string(sequences.size()) +
                                " entries does not match " + std::to_string(n) + " rows of " +
                                std::to_string(spec.max_len));
  }
  RngStream* rng = training ? &stochastic : nullptr;
  Tensor<S> cur;
  std::size_t li = 0;
  for (const LayerDesc& d : spec.plan) {
    switch (d.kind) {
      case LayerKind::Embedding:
        cur = std::get<nn::EmbeddingLayer<S>>(layers[li++]).forward(sequences, n, spec.max_len);
        break;
      case LayerKind::Conv1D:
        cur = std::get<nn::Conv1DLayer<S>>(layers[li++]).forward(cur);
        break;
      case LayerKind::SeparableConv1D:
        cur = std::get<nn::SeparableConv1DLayer<S>>(layers[li++]).forward(cur);
        break;
      case LayerKind::MaxPool1D:
        cur = nn::maxpool1d(cur, d.width, d.stride);
        break;
      case LayerKind::GlobalMaxPool:
        cur = nn::global_maxpool(cur);
        break;
      case LayerKind::Dropout:
        cur = nn::dropout(cur, d.rate, training, rng);
        break;
      case LayerKind::Flatten:
        cur = reshape(cur, {n, cur.dim(1) * cur.dim(2)});
        break;
      case LayerKind::Dense:
        cur = std::get<nn::DenseLayer<S>>(layers[li++]).forward(cur);
        break;
      case LayerKind::Lstm:
        cur = std::get<nn::LSTMLayer<S>>(layers[li++]).forward(cur, d.return_sequences, training,
                                                               rng);
        break;
      case LayerKind::BiLstm:
        cur = std::get<nn::BidirectionalLSTM<S>>(layers[li++]).forward(cur, d.return_sequences,
                                                                       training, rng);
        break;
    }
  }
  return reshape(cur, {n});
}

}  // namespace textclf::zoo
