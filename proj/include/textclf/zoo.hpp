#pragma once
// The model zoo: declarative construction of the twelve neural architectures
// (ids a-l) plus the bag-of-words linear baseline, with every hyperparameter
// resolved and recorded in a ModelSpec.
//
//   a  LSTM
//   b  LSTM, input/recurrent dropout
//   c  2-stack LSTM with dropout
//   d  3-stack LSTM with dropout
//   e  bidirectional LSTM with dropout
//   f  Conv1D -> global max pool -> dropout
//   g  f with a separable convolution
//   h  [Conv, Conv, MaxPool] x2 -> dropout -> dense -> dropout
//   i  h with single convolutions per block
//   j  Conv1D -> MaxPool -> LSTM
//   k  j with a bidirectional LSTM
//   l  bidirectional LSTM -> Conv1D -> global max pool
//
// Every model ends in a single sigmoid unit.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "textclf/corpus.hpp"
#include "textclf/layers.hpp"
#include "textclf/rng.hpp"
#include "textclf/tensor.hpp"

namespace textclf::zoo {

enum class LayerKind {
  Embedding,
  Conv1D,
  SeparableConv1D,
  MaxPool1D,
  GlobalMaxPool,
  Dropout,
  Flatten,
  Dense,
  Lstm,
  BiLstm,
};

const char* layer_kind_name(LayerKind kind);

struct LayerDesc {
  LayerKind kind;
  std::int64_t in_features = 0;   // feature width consumed (resolved)
  std::int64_t out_features = 0;  // embedding dim / filters / units / hidden
  std::int64_t width = 0;         // conv kernel or pool width
  std::int64_t stride = 0;        // pool stride
  double rate = 0.0;              // dropout rate
  double input_dropout = 0.0;     // lstm
  double recurrent_dropout = 0.0; // lstm
  bool return_sequences = false;  // lstm / bilstm
  nn::Activation activation = nn::Activation::Linear;
  std::int64_t param_count = 0;

  bool operator==(const LayerDesc&) const = default;
};

/// Resolved knobs; the defaults are the desk-scale configuration every run
/// records alongside its checkpoints.
struct ModelHyper {
  std::int64_t hidden_size = 32;
  std::int64_t conv_filters = 64;
  std::int64_t conv_kernel_width = 5;
  std::int64_t dense_units = 64;
  std::int64_t pool_width = 2;
  std::int64_t pool_stride = 2;
  double dropout_rate = 0.2;
  std::int64_t embedding_dim = 0;  // 0 = fourth-root rule
};

struct ModelSpec {
  std::string model_id;
  std::int64_t vocab_size = 0;  // V: distinct training words (table has V+2 rows)
  std::int64_t max_len = 0;
  ModelHyper hyper;
  std::int64_t embedding_dim = 0;  // resolved
  std::vector<LayerDesc> plan;
  std::int64_t parameter_count = 0;

  static const std::vector<std::string>& known_ids();  // a..l + baseline

  /// Builds the layer plan for the id and computes the parameter count,
  /// validating that max_len admits every convolution and pool stage.
  static ModelSpec resolve(const std::string& model_id, std::int64_t vocab_size,
                           std::int64_t max_len, ModelHyper hyper = {});

  /// Human-readable "key = value" document naming the id and every knob.
  std::string to_key_values() const;
  static ModelSpec parse_key_values(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static ModelSpec load(const std::filesystem::path& path);
};

template <typename S>
struct Model {
  using AnyLayer =
      std::variant<nn::EmbeddingLayer<S>, nn::Conv1DLayer<S>, nn::SeparableConv1DLayer<S>,
                   nn::DenseLayer<S>, nn::LSTMLayer<S>, nn::BidirectionalLSTM<S>>;

  ModelSpec spec;
  std::vector<AnyLayer> layers;  // parameterized layers, in plan order
  std::vector<std::pair<std::string, Tensor<S>>> params;
  RngStream stochastic{0};  // dropout draws during training forward

  /// Probabilities, shape (n). Throws if the batch length disagrees with the
  /// spec's max_len.
  Tensor<S> forward(std::span<const std::int32_t> sequences, std::int64_t n, bool training);
};

template <typename S>
Model<S> build(const ModelSpec& spec, std::uint64_t seed_init, std::uint64_t seed_stochastic);

// --------------------------------------------------------------------------
// Bag-of-words linear baseline: binary term-presence features, linear margin
// scorer trained with L2-regularized hinge loss by subgradient descent.
// --------------------------------------------------------------------------

struct BaselineConfig {
  double l2 = 1e-4;
  double learning_rate = 0.1;
  int epochs = 50;
  std::uint64_t seed = 2;
};

struct BaselineModel {
  corpus::Vocabulary vocab;
  std::vector<double> weights;  // one per vocabulary word, index order
  double bias = 0.0;
  std::vector<double> epoch_losses;  // mean hinge + L2 per epoch
  std::vector<double> epoch_accuracies;
  std::vector<double> epoch_seconds;

  double score(const corpus::Document& doc) const;
  std::vector<double> scores(const std::vector<corpus::Document>& docs) const;
};

BaselineModel build_baseline(const std::vector<corpus::Document>& train_docs,
                             BaselineConfig config = {});
BaselineModel build_baseline(const std::vector<corpus::Document>& train_docs,
                             corpus::Vocabulary vocab, BaselineConfig config = {});

}  // namespace textclf::zoo

#include "textclf/zoo_impl.hpp"
