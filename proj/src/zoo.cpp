#include "textclf/zoo.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "textclf/errors.hpp"

namespace textclf::zoo {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Embedding: return "embedding";
    case LayerKind::Conv1D: return "conv1d";
    case LayerKind::SeparableConv1D: return "sepconv1d";
    case LayerKind::MaxPool1D: return "maxpool1d";
    case LayerKind::GlobalMaxPool: return "globalmaxpool";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Lstm: return "lstm";
    case LayerKind::BiLstm: return "bilstm";
  }
  return "?";
}

const std::vector<std::string>& ModelSpec::known_ids() {
  static const std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f", "g",
                                               "h", "i", "j", "k", "l", "baseline"};
  return ids;
}

namespace {

/// Tracks activation shape through the plan and accumulates parameter counts.
struct PlanBuilder {
  const std::string& id;
  const ModelHyper& hp;
  std::int64_t vocab_size;
  std::int64_t len;       // time dimension; meaningless once vector-shaped
  std::int64_t features;  // channel / feature width
  bool vector_shaped = false;
  std::vector<LayerDesc> plan;
  std::int64_t total = 0;

  void need_sequence(const char* what) const {
    if (vector_shaped) {
      throw std::invalid_argument("model '" + id + "': " + what +
                                  " needs a sequence-shaped input");
    }
  }

  void embedding(std::int64_t d) {
    LayerDesc desc{.kind = LayerKind::Embedding, .in_features = vocab_size + 2, .out_features = d};
    desc.param_count = (vocab_size + 2) * d;
    features = d;
    push(desc);
  }

  void conv(bool separable) {
    need_sequence("a convolution");
    const auto k = hp.conv_kernel_width;
    if (len < k) {
      throw std::invalid_argument("model '" + id + "': sequence length " + std::to_string(len) +
                                  " is shorter than the convolution kernel width " +
                                  std::to_string(k));
    }
    LayerDesc desc{.kind = separable ? LayerKind::SeparableConv1D : LayerKind::Conv1D,
                   .in_features = features,
                   .out_features = hp.conv_filters,
                   .width = k};
    desc.activation = nn::Activation::Relu;
    desc.param_count = separable
                           ? k * features + features * hp.conv_filters + hp.conv_filters
                           : k * features * hp.conv_filters + hp.conv_filters;
    len = len - k + 1;
    features = hp.conv_filters;
    push(desc);
  }

  void pool() {
    need_sequence("max pooling");
    if (len < hp.pool_width) {
      throw std::invalid_argument("model '" + id + "': sequence length " + std::to_string(len) +
                                  " is shorter than the pool width " +
                                  std::to_string(hp.pool_width));
    }
    LayerDesc desc{.kind = LayerKind::MaxPool1D,
                   .in_features = features,
                   .out_features = features,
                   .width = hp.pool_width,
                   .stride = hp.pool_stride};
    len = (len - hp.pool_width) / hp.pool_stride + 1;
    push(desc);
  }

  void global_pool() {
    need_sequence("global max pooling");
    push({.kind = LayerKind::GlobalMaxPool, .in_features = features, .out_features = features});
    vector_shaped = true;
  }

  void dropout() {
    LayerDesc desc{.kind = LayerKind::Dropout, .in_features = features, .out_features = features};
    desc.rate = hp.dropout_rate;
    push(desc);
  }

  void flatten() {
    need_sequence("flatten");
    LayerDesc desc{.kind = LayerKind::Flatten, .in_features = features};
    desc.out_features = len * features;
    features = desc.out_features;
    vector_shaped = true;
    push(desc);
  }

  void dense(std::int64_t units, nn::Activation act) {
    if (!vector_shaped) {
      throw std::invalid_argument("model '" + id + "': dense layer needs a vector-shaped input");
    }
    LayerDesc desc{.kind = LayerKind::Dense, .in_features = features, .out_features = units};
    desc.activation = act;
    desc.param_count = features * units + units;
    features = units;
    push(desc);
  }

  void lstm(bool bidirectional, bool sequences, double input_dropout, double recurrent_dropout) {
    need_sequence("a recurrent layer");
    const auto h = hp.hidden_size;
    LayerDesc desc{.kind = bidirectional ? LayerKind::BiLstm : LayerKind::Lstm,
                   .in_features = features,
                   .out_features = h};
    desc.input_dropout = input_dropout;
    desc.recurrent_dropout = recurrent_dropout;
    desc.return_sequences = sequences;
    const std::int64_t one_direction = 4 * (features * h + h * h + h);
    desc.param_count = bidirectional ? 2 * one_direction : one_direction;
    features = bidirectional ? 2 * h : h;
    if (!sequences) vector_shaped = true;
    push(desc);
  }

  void head() { dense(1, nn::Activation::Sigmoid); }

  void push(LayerDesc desc) {
    total += desc.param_count;
    plan.push_back(std::move(desc));
  }
};

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

ModelSpec ModelSpec::resolve(const std::string& model_id, std::int64_t vocab_size,
                             std::int64_t max_len, ModelHyper hyper) {
  const auto& ids = known_ids();
  if (std::find(ids.begin(), ids.end(), model_id) == ids.end()) {
    throw std::invalid_argument("unknown model id '" + model_id + "'");
  }
  if (vocab_size < 1) throw std::invalid_argument("ModelSpec: vocab_size must be positive");
  if (max_len < 1) throw std::invalid_argument("ModelSpec: max_len must be positive");

  ModelSpec spec;
  spec.model_id = model_id;
  spec.vocab_size = vocab_size;
  spec.max_len = max_len;
  spec.hyper = hyper;
  spec.embedding_dim =
      hyper.embedding_dim > 0 ? hyper.embedding_dim : nn::embedding_dim(vocab_size);

  if (model_id == "baseline") {
    spec.parameter_count = vocab_size + 1;  // one weight per word plus bias
    return spec;
  }

  PlanBuilder b{.id = model_id, .hp = hyper, .vocab_size = vocab_size, .len = max_len,
                .features = 0};
  const double dr = hyper.dropout_rate;
  b.embedding(spec.embedding_dim);
  if (model_id == "a") {
    b.lstm(false, false, 0.0, 0.0);
  } else if (model_id == "b") {
    b.lstm(false, false, dr, dr);
  } else if (model_id == "c") {
    b.lstm(false, true, dr, dr);
    b.lstm(false, false, dr, dr);
  } else if (model_id == "d") {
    b.lstm(false, true, dr, dr);
    b.lstm(false, true, dr, dr);
    b.lstm(false, false, dr, dr);
  } else if (model_id == "e") {
    b.lstm(true, false, dr, dr);
  } else if (model_id == "f" || model_id == "g") {
    b.conv(model_id == "g");
    b.global_pool();
    b.dropout();
  } else if (model_id == "h" || model_id == "i") {
    const int convs_per_block = model_id == "h" ? 2 : 1;
    for (int block = 0; block < 2; ++block) {
      for (int c = 0; c < convs_per_block; ++c) b.conv(false);
      b.pool();
    }
    b.dropout();
    b.flatten();
    b.dense(hyper.dense_units, nn::Activation::Relu);
    b.dropout();
  } else if (model_id == "j" || model_id == "k") {
    b.conv(false);
    b.pool();
    b.lstm(model_id == "k", false, 0.0, 0.0);
  } else if (model_id == "l") {
    b.lstm(true, true, 0.0, 0.0);
    b.conv(false);
    b.global_pool();
  }
  b.head();
  spec.plan = std::move(b.plan);
  spec.parameter_count = b.total;
  return spec;
}

std::string ModelSpec::to_key_values() const {
  std::ostringstream os;
  os << "model_id = " << model_id << '\n'
     << "vocab_size = " << vocab_size << '\n'
     << "max_len = " << max_len << '\n'
     << "embedding_dim = " << embedding_dim << '\n'
     << "hidden_size = " << hyper.hidden_size << '\n'
     << "conv_filters = " << hyper.conv_filters << '\n'
     << "conv_kernel_width = " << hyper.conv_kernel_width << '\n'
     << "dense_units = " << hyper.dense_units << '\n'
     << "pool_width = " << hyper.pool_width << '\n'
     << "pool_stride = " << hyper.pool_stride << '\n'
     << "dropout_rate = " << fmt_double(hyper.dropout_rate) << '\n'
     << "parameter_count = " << parameter_count << '\n';
  return os.str();
}

ModelSpec ModelSpec::parse_key_values(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw DataError("model spec: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto want = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("model spec: missing key '") + key + "'");
    return it->second;
  };
  ModelHyper hp;
  hp.hidden_size = std::stoll(want("hidden_size"));
  hp.conv_filters = std::stoll(want("conv_filters"));
  hp.conv_kernel_width = std::stoll(want("conv_kernel_width"));
  hp.dense_units = std::stoll(want("dense_units"));
  hp.pool_width = std::stoll(want("pool_width"));
  hp.pool_stride = std::stoll(want("pool_stride"));
  hp.dropout_rate = std::stod(want("dropout_rate"));
  hp.embedding_dim = std::stoll(want("embedding_dim"));
  ModelSpec spec = resolve(want("model_id"), std::stoll(want("vocab_size")),
                           std::stoll(want("max_len")), hp);
  const auto recorded = std::stoll(want("parameter_count"));
  if (recorded != spec.parameter_count) {
    throw DataError("model spec: recorded parameter_count " + std::to_string(recorded) +
                    " does not match resolved count " + std::to_string(spec.parameter_count));
  }
  return spec;
}

void ModelSpec::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model spec: " + path.string());
  out << to_key_values();
}

ModelSpec ModelSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read model spec: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

// ---------------------------------------------------------------------------
// Baseline
// ---------------------------------------------------------------------------

namespace {

std::vector<std::int32_t> presence_features(const corpus::Document& doc,
                                            const corpus::Vocabulary& vocab) {
  std::unordered_set<std::int32_t> seen;
  for (const auto& tok : corpus::tokenize(doc.text)) {
    const auto idx = vocab.lookup(tok);
    if (idx >= 2) seen.insert(idx - 2);
  }
  std::vector<std::int32_t> feats(seen.begin(), seen.end());
  std::sort(feats.begin(), feats.end());
  return feats;
}

}  // namespace

double BaselineModel::score(const corpus::Document& doc) const {
  double s = bias;
  for (const auto f : presence_features(doc, vocab)) s += weights[static_cast<std::size_t>(f)];
  return s;
}

std::vector<double> BaselineModel::scores(const std::vector<corpus::Document>& docs) const {
  std::vector<double> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(score(doc));
  return out;
}

BaselineModel build_baseline(const std::vector<corpus::Document>& train_docs,
                             BaselineConfig config) {
  if (train_docs.empty()) throw std::invalid_argument("build_baseline: empty corpus");
  return build_baseline(train_docs, corpus::Vocabulary::build(train_docs), config);
}

BaselineModel build_baseline(const std::vector<corpus::Document>& train_docs,
                             corpus::Vocabulary vocab, BaselineConfig config) {
  if (train_docs.empty()) throw std::invalid_argument("build_baseline: empty corpus");
  if (vocab.size() == 0) throw DataError("empty vocabulary");

  BaselineModel model;
  model.vocab = std::move(vocab);
  model.weights.assign(static_cast<std::size_t>(model.vocab.size()), 0.0);

  std::vector<std::vector<std::int32_t>> features;
  std::vector<double> signs;
  features.reserve(train_docs.size());
  for (const auto& doc : train_docs) {
    features.push_back(presence_features(doc, model.vocab));
    signs.push_back(doc.label == 1 ? 1.0 : -1.0);
  }

  RngStream rng(config.seed);
  std::vector<std::size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const double lr = config.learning_rate;
  const double shrink = 1.0 - lr * config.l2;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    for (const auto i : order) {
      double margin = model.bias;
      for (const auto f : features[i]) margin += model.weights[static_cast<std::size_t>(f)];
      margin *= signs[i];
      for (auto& w : model.weights) w *= shrink;
      if (margin < 1.0) {
        for (const auto f : features[i]) model.weights[static_cast<std::size_t>(f)] += lr * signs[i];
        model.bias += lr * signs[i];
      }
    }
    double loss = 0.0;
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      double margin = model.bias;
      for (const auto f : features[i]) margin += model.weights[static_cast<std::size_t>(f)];
      loss += std::max(0.0, 1.0 - signs[i] * margin);
      if ((margin >= 0.0 ? 1.0 : -1.0) == signs[i]) ++correct;
    }
    double norm2 = 0.0;
    for (const auto w : model.weights) norm2 += w * w;
    model.epoch_losses.push_back(loss / static_cast<double>(features.size()) +
                                 0.5 * config.l2 * norm2);
    model.epoch_accuracies.push_back(static_cast<double>(correct) /
                                     static_cast<double>(features.size()));
    model.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return model;
}

}  // namespace textclf::zoo
