#pragma once
// Binary cross-entropy training loop: adaptive-moment updates, the
// small-improvement early-stopping rule, lowest-loss epoch selection,
// per-epoch checkpointing, and two-stream seeded determinism (seed_init for
// parameters, seed_stochastic for shuffling and dropout).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "textclf/checkpoint.hpp"
#include "textclf/corpus.hpp"
#include "textclf/errors.hpp"
#include "textclf/metrics.hpp"
#include "textclf/tensor.hpp"
#include "textclf/zoo.hpp"

namespace textclf::train {

struct TrainConfig {
  std::int64_t batch_size = 32;
  double learning_rate = 1e-3;
  int max_epochs = 30;
  double stop_min_delta = 0.01;
  int stop_patience = 2;
  std::uint64_t seed_init = 1;
  std::uint64_t seed_stochastic = 2;
  bool shuffle = true;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;
};

struct EvalResult {
  double auc = 0.0;
  double accuracy = 0.0;
  metrics::RocCurve roc;
};

struct RunReport {
  zoo::ModelSpec spec;
  TrainConfig config;
  std::vector<EpochRecord> epochs;
  int stop_epoch = 0;
  int selected_epoch = 0;
  int stop_minus_patience_epoch = 0;  // logged alongside for comparison
  std::string checkpoint;            // file name of the selected epoch
  EvalResult test;
  std::optional<EvalResult> validation;
  double total_seconds = 0.0;
};

/// -mean(y log p + (1-y) log(1-p)) with p clamped to [eps, 1-eps], eps 1e-7.
/// The clamp is transparent to the gradient (evaluated at the clamped value).
template <typename S>
Tensor<S> bce_loss(const Tensor<S>& p, const Tensor<S>& y) {
  if (p.rank() != 1 || p.shape() != y.shape()) {
    throw std::invalid_argument("bce_loss: probabilities " + shape_str(p.shape()) +
                                " and labels " + shape_str(y.shape()) +
                                " must be equal-length vectors");
  }
  const S eps = static_cast<S>(1e-7);
  const auto pn = p.node();
  const auto yn = y.node();
  const auto n = p.size();
  const S inv_n = S(1) / static_cast<S>(n);
  S acc = S(0);
  for (std::int64_t i = 0; i < n; ++i) {
    const S pi = std::clamp(pn->value[static_cast<std::size_t>(i)], eps, S(1) - eps);
    const S yi = yn->value[static_cast<std::size_t>(i)];
    acc -= yi * std::log(pi) + (S(1) - yi) * std::log(S(1) - pi);
  }
  return detail::make_result<S>(
      {}, {acc * inv_n}, {pn, yn}, [pn, yn, n, inv_n, eps](detail::Node<S>& self) {
        if (!pn->requires_grad) return;
        pn->ensure_grad();
        const S g = self.grad[0] * inv_n;
        for (std::int64_t i = 0; i < n; ++i) {
          const auto iu = static_cast<std::size_t>(i);
          const S pi = std::clamp(pn->value[iu], eps, S(1) - eps);
          const S yi = yn->value[iu];
          pn->grad[iu] += g * (pi - yi) / (pi * (S(1) - pi));
        }
      });
}

/// Adaptive-moment optimizer; moments are kept in double regardless of the
/// parameter scalar type.
template <typename S>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<std::pair<std::string, Tensor<S>>>& params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k].assign(static_cast<std::size_t>(params[k].second.size()), 0.0);
        v_[k].assign(static_cast<std::size_t>(params[k].second.size()), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& tensor = params[k].second;
      auto vals = tensor.values_mut();
      const bool has = tensor.has_grad();
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double g = has ? static_cast<double>(tensor.grad()[i]) : 0.0;
        m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g;
        v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g * g;
        vals[i] -= static_cast<S>(lr_ * (m_[k][i] / bc1) / (std::sqrt(v_[k][i] / bc2) + eps_));
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// True iff each of the last `patience` epochs improved on its predecessor by
/// at most min_delta (no improvement and regression both count). Pure function
/// of the last patience+1 losses.
inline bool should_stop(const std::vector<double>& losses, double min_delta, int patience) {
  if (losses.empty()) throw std::invalid_argument("should_stop: no losses recorded");
  if (static_cast<int>(losses.size()) < patience + 1) return false;
  const auto n = losses.size();
  for (int i = 0; i < patience; ++i) {
    const double improvement = losses[n - 2 - static_cast<std::size_t>(i)] -
                               losses[n - 1 - static_cast<std::size_t>(i)];
    if (improvement > min_delta) return false;
  }
  return true;
}

/// 1-based index of the lowest loss; earliest epoch on ties.
inline int select_epoch(const std::vector<double>& losses) {
  if (losses.empty()) throw std::invalid_argument("select_epoch: no losses recorded");
  std::size_t best = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i] < losses[best]) best = i;
  }
  return static_cast<int>(best) + 1;
}

inline std::string epoch_checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d.ckpt", epoch);
  return buf;
}

/// One pass over the data: shuffled batches, forward in training mode, BCE,
/// backward, optimizer step. Aborts on a non-finite loss.
template <typename S>
EpochRecord train_epoch(zoo::Model<S>& model, const corpus::EncodedBatch& data,
                        const TrainConfig& config, Adam<S>& optimizer, int epoch_index) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto n = data.rows;
  const auto max_len = data.max_len;
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  if (config.shuffle) model.stochastic.shuffle(order);

  double loss_sum = 0.0;
  std::int64_t correct = 0;
  std::vector<std::int32_t> seq;
  std::vector<S> target;
  for (std::int64_t start = 0; start < n; start += config.batch_size) {
    const auto bn = std::min<std::int64_t>(config.batch_size, n - start);
    seq.assign(static_cast<std::size_t>(bn * max_len), 0);
    target.assign(static_cast<std::size_t>(bn), S(0));
    for (std::int64_t i = 0; i < bn; ++i) {
      const auto row = order[static_cast<std::size_t>(start + i)];
      const auto src = data.row(row);
      std::copy(src.begin(), src.end(), seq.begin() + static_cast<std::size_t>(i * max_len));
      target[static_cast<std::size_t>(i)] = static_cast<S>(data.labels[static_cast<std::size_t>(row)]);
    }
    Tensor<S> probs = model.forward(seq, bn, /*training=*/true);
    Tensor<S> labels = Tensor<S>::from({bn}, target);
    Tensor<S> loss = bce_loss(probs, labels);
    const double loss_value = static_cast<double>(loss.item());
    if (!std::isfinite(loss_value)) {
      throw NumericalError("non-finite training loss (model " + model.spec.model_id +
                           ", epoch " + std::to_string(epoch_index) + ", batch starting at row " +
                           std::to_string(start) + ")");
    }
    loss_sum += loss_value * static_cast<double>(bn);
    for (std::int64_t i = 0; i < bn; ++i) {
      const int predicted = probs.values()[static_cast<std::size_t>(i)] >= S(0.5) ? 1 : 0;
      const int truth = target[static_cast<std::size_t>(i)] >= S(0.5) ? 1 : 0;
      if (predicted == truth) ++correct;
    }
    for (auto& [name, param] : model.params) param.zero_grad();
    backward(loss);
    optimizer.step(model.params);
  }
  EpochRecord rec;
  rec.epoch = epoch_index;
  rec.loss = loss_sum / static_cast<double>(n);
  rec.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// Forward pass in evaluation mode, chunked; returns one probability (or
/// margin) per row as double.
template <typename S>
std::vector<double> predict(zoo::Model<S>& model, const corpus::EncodedBatch& data,
                            std::int64_t chunk = 256) {
  NoGradGuard no_grad;
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(data.rows));
  for (std::int64_t start = 0; start < data.rows; start += chunk) {
    const auto bn = std::min<std::int64_t>(chunk, data.rows - start);
    const std::span<const std::int32_t> seq{data.sequences.data() + start * data.max_len,
                                            static_cast<std::size_t>(bn * data.max_len)};
    Tensor<S> probs = model.forward(seq, bn, /*training=*/false);
    for (const S v : probs.values()) scores.push_back(static_cast<double>(v));
  }
  return scores;
}

template <typename S>
EvalResult evaluate_model(zoo::Model<S>& model, const corpus::EncodedBatch& data) {
  EvalResult result;
  const auto scores = predict(model, data);
  result.roc = metrics::roc(scores, data.labels);
  result.auc = result.roc.auc;
  result.accuracy = metrics::accuracy(scores, data.labels, 0.5);
  return result;
}

/// Full protocol: train with early stopping, checkpoint every epoch, reload
/// the lowest-loss epoch, evaluate on the held-out batches. The vocabulary
/// behind the encoded batches must come from the training split alone.
template <typename S>
RunReport run(const zoo::ModelSpec& spec, const corpus::EncodedBatch& train_batch,
              const corpus::EncodedBatch& test_batch, const corpus::EncodedBatch* validation_batch,
              const TrainConfig& config, const std::filesystem::path& checkpoint_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(checkpoint_dir);
  zoo::Model<S> model = zoo::build<S>(spec, config.seed_init, config.seed_stochastic);
  Adam<S> optimizer(config.learning_rate);

  RunReport report;
  report.spec = spec;
  report.config = config;

  std::vector<double> losses;
  int last_epoch = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochRecord rec = train_epoch(model, train_batch, config, optimizer, epoch);
    report.epochs.push_back(rec);
    losses.push_back(rec.loss);
    ckpt::save(ckpt::snapshot(model.params), checkpoint_dir / epoch_checkpoint_name(epoch));
    last_epoch = epoch;
    if (should_stop(losses, config.stop_min_delta, config.stop_patience)) break;
  }
  report.stop_epoch = last_epoch;
  report.selected_epoch = select_epoch(losses);
  report.stop_minus_patience_epoch = std::max(1, last_epoch - config.stop_patience);
  report.checkpoint = epoch_checkpoint_name(report.selected_epoch);

  const auto selected = ckpt::load(checkpoint_dir / report.checkpoint);
  ckpt::restore(selected, model.params);
  report.test = evaluate_model(model, test_batch);
  if (validation_batch != nullptr) {
    report.validation = evaluate_model(model, *validation_batch);
  }
  report.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

/// Baseline counterpart of run(): fixed-epoch hinge training, one final
/// checkpoint, margins scored at threshold 0.
RunReport run_baseline(const zoo::ModelSpec& spec, const std::vector<corpus::Document>& train_docs,
                       const std::vector<corpus::Document>& test_docs,
                       const std::vector<corpus::Document>* validation_docs,
                       corpus::Vocabulary vocab, const zoo::BaselineConfig& config,
                       const std::filesystem::path& checkpoint_dir);

/// Report serialization; timing fields (epoch seconds, total_seconds) are the
/// only parts that vary between identically-seeded runs.
std::string report_to_json(const RunReport& report);
void write_report(const RunReport& report, const std::filesystem::path& path);

}  // namespace textclf::train
