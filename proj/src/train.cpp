#include "textclf/train.hpp"

#include <fstream>

#include <json.hpp>

namespace textclf::train {

RunReport run_baseline(const zoo::ModelSpec& spec, const std::vector<corpus::Document>& train_docs,
                       const std::vector<corpus::Document>& test_docs,
                       const std::vector<corpus::Document>* validation_docs,
                       corpus::Vocabulary vocab, const zoo::BaselineConfig& config,
                       const std::filesystem::path& checkpoint_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(checkpoint_dir);

  zoo::BaselineModel model = zoo::build_baseline(train_docs, std::move(vocab), config);

  RunReport report;
  report.spec = spec;
  report.config.batch_size = 1;
  report.config.learning_rate = config.learning_rate;
  report.config.max_epochs = config.epochs;
  report.config.seed_init = config.seed;
  report.config.seed_stochastic = config.seed;
  for (std::size_t e = 0; e < model.epoch_losses.size(); ++e) {
    report.epochs.push_back(EpochRecord{static_cast<int>(e) + 1, model.epoch_losses[e],
                                        model.epoch_accuracies[e], model.epoch_seconds[e]});
  }
  // Fixed-epoch subgradient descent: the final weights are the model, so the
  // stop and selected epochs coincide with the last one.
  report.stop_epoch = config.epochs;
  report.selected_epoch = config.epochs;
  report.stop_minus_patience_epoch = config.epochs;
  report.checkpoint = epoch_checkpoint_name(config.epochs);

  std::vector<ckpt::NamedTensorData> tensors;
  tensors.push_back({"baseline.weights",
                     {static_cast<std::int64_t>(model.weights.size())},
                     model.weights});
  tensors.push_back({"baseline.bias", {1}, {model.bias}});
  ckpt::save(tensors, checkpoint_dir / report.checkpoint);

  auto evaluate = [&](const std::vector<corpus::Document>& docs) {
    EvalResult result;
    const auto margins = model.scores(docs);
    std::vector<int> labels;
    labels.reserve(docs.size());
    for (const auto& doc : docs) labels.push_back(doc.label);
    result.roc = metrics::roc(margins, labels);
    result.auc = result.roc.auc;
    result.accuracy = metrics::accuracy(margins, labels, 0.0);
    return result;
  };
  report.test = evaluate(test_docs);
  if (validation_docs != nullptr) report.validation = evaluate(*validation_docs);
  report.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

namespace {

nlohmann::ordered_json spec_to_json(const zoo::ModelSpec& spec) {
  nlohmann::ordered_json j;
  j["model_id"] = spec.model_id;
  j["vocab_size"] = spec.vocab_size;
  j["max_len"] = spec.max_len;
  j["embedding_dim"] = spec.embedding_dim;
  j["hidden_size"] = spec.hyper.hidden_size;
  j["conv_filters"] = spec.hyper.conv_filters;
  j["conv_kernel_width"] = spec.hyper.conv_kernel_width;
  j["dense_units"] = spec.hyper.dense_units;
  j["pool_width"] = spec.hyper.pool_width;
  j["pool_stride"] = spec.hyper.pool_stride;
  j["dropout_rate"] = spec.hyper.dropout_rate;
  j["parameter_count"] = spec.parameter_count;
  return j;
}

nlohmann::ordered_json eval_to_json(const EvalResult& eval) {
  nlohmann::ordered_json j;
  j["auc"] = eval.auc;
  j["accuracy"] = eval.accuracy;
  auto roc = nlohmann::ordered_json::array();
  for (const auto& p : eval.roc.points) {
    roc.push_back({p.threshold, p.fpr, p.tpr});
  }
  j["roc"] = std::move(roc);
  return j;
}

}  // namespace

std::string report_to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["model_spec"] = spec_to_json(report.spec);
  nlohmann::ordered_json cfg;
  cfg["batch_size"] = report.config.batch_size;
  cfg["learning_rate"] = report.config.learning_rate;
  cfg["max_epochs"] = report.config.max_epochs;
  cfg["stop_min_delta"] = report.config.stop_min_delta;
  cfg["stop_patience"] = report.config.stop_patience;
  cfg["seed_init"] = report.config.seed_init;
  cfg["seed_stochastic"] = report.config.seed_stochastic;
  cfg["shuffle"] = report.config.shuffle;
  j["train_config"] = std::move(cfg);
  auto epochs = nlohmann::ordered_json::array();
  for (const auto& rec : report.epochs) {
    nlohmann::ordered_json e;
    e["epoch"] = rec.epoch;
    e["loss"] = rec.loss;
    e["accuracy"] = rec.accuracy;
    e["seconds"] = rec.seconds;
    epochs.push_back(std::move(e));
  }
  j["epochs"] = std::move(epochs);
  j["stop_epoch"] = report.stop_epoch;
  j["selected_epoch"] = report.selected_epoch;
  j["stop_minus_patience_epoch"] = report.stop_minus_patience_epoch;
  j["selected_checkpoint"] = report.checkpoint;
  j["test"] = eval_to_json(report.test);
  j["validation"] = report.validation ? eval_to_json(*report.validation)
                                      : nlohmann::ordered_json(nullptr);
  j["total_seconds"] = report.total_seconds;
  return j.dump(2) + "\n";
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path.string());
  out << report_to_json(report);
}

}  // namespace textclf::train
