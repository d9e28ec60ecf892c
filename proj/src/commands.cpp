#include "textclf/commands.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "textclf/errors.hpp"

namespace textclf::cmd {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

corpus::SyntheticSpec with_seed(corpus::SyntheticSpec spec, std::uint64_t salt) {
  spec.seed = splitmix64(spec.seed ^ splitmix64(salt));
  return spec;
}

ordered_json synthetic_spec_json(const corpus::SyntheticSpec& spec) {
  ordered_json j;
  j["n_docs"] = spec.n_docs;
  j["positive_fraction"] = spec.positive_fraction;
  j["vocab_size"] = spec.vocab_size;
  j["n_marker_words"] = spec.n_marker_words;
  j["marker_probability"] = spec.marker_probability;
  j["mean_length"] = spec.mean_length;
  j["length_jitter"] = spec.length_jitter;
  j["seed"] = spec.seed;
  return j;
}

}  // namespace

void cmd_generate(const GenerateOptions& options) {
  options.spec.validate();
  if (options.shift_fraction < 0.0 || options.shift_fraction > 1.0) {
    throw UsageError("--shift-fraction must be in [0, 1]");
  }
  fs::create_directories(options.out_dir);

  struct Split {
    const char* name;
    std::uint64_t salt;
    double shift;
  };
  const Split splits[] = {{"train", 1, 0.0}, {"test", 2, 0.0},
                          {"validation", 3, options.shift_fraction}};

  ordered_json manifest;
  manifest["spec"] = synthetic_spec_json(options.spec);
  manifest["shift_fraction"] = options.shift_fraction;
  ordered_json split_info;
  for (const auto& split : splits) {
    const auto spec = with_seed(options.spec, split.salt);
    const auto docs = corpus::generate_synthetic(spec, split.shift);
    const auto file = options.out_dir / (std::string(split.name) + ".jsonl");
    corpus::save_jsonl(docs, file);
    ordered_json info;
    info["file"] = file.filename().string();
    info["seed"] = spec.seed;
    info["shift_fraction"] = split.shift;
    info["n_docs"] = spec.n_docs;
    split_info[split.name] = std::move(info);
  }
  manifest["splits"] = std::move(split_info);
  std::ofstream out(options.out_dir / "manifest.json");
  if (!out) throw DataError("cannot write manifest: " + (options.out_dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

namespace {

ordered_json resolved_config_json(const TrainOptions& options, const zoo::ModelSpec& spec) {
  ordered_json j;
  j["command"] = "train";
  j["model_id"] = options.model_id;
  j["train"] = options.train_path.string();
  j["test"] = options.test_path.string();
  j["validation"] =
      options.validation_path ? ordered_json(options.validation_path->string()) : ordered_json(nullptr);
  j["out"] = options.out_dir.string();
  j["max_len"] = spec.max_len;
  j["length_percentile"] = options.length_percentile;
  j["batch_size"] = options.config.batch_size;
  j["learning_rate"] = options.config.learning_rate;
  j["max_epochs"] = options.config.max_epochs;
  j["stop_delta"] = options.config.stop_min_delta;
  j["stop_patience"] = options.config.stop_patience;
  j["seed_init"] = options.config.seed_init;
  j["seed_stochastic"] = options.config.seed_stochastic;
  j["shuffle"] = options.config.shuffle;
  j["hidden_size"] = spec.hyper.hidden_size;
  j["conv_filters"] = spec.hyper.conv_filters;
  j["conv_kernel_width"] = spec.hyper.conv_kernel_width;
  j["dense_units"] = spec.hyper.dense_units;
  j["pool_width"] = spec.hyper.pool_width;
  j["pool_stride"] = spec.hyper.pool_stride;
  j["dropout_rate"] = spec.hyper.dropout_rate;
  j["embedding_dim"] = spec.embedding_dim;
  if (options.model_id == "baseline") {
    j["baseline_l2"] = options.baseline.l2;
    j["baseline_learning_rate"] = options.baseline.learning_rate;
    j["baseline_epochs"] = options.baseline.epochs;
  }
  return j;
}

void write_learning_curve(const train::RunReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write learning curve: " + path.string());
  out << "epoch,loss,accuracy,seconds\n";
  out.precision(17);
  for (const auto& rec : report.epochs) {
    out << rec.epoch << ',' << rec.loss << ',' << rec.accuracy << ',' << rec.seconds << '\n';
  }
}

}  // namespace

train::RunReport cmd_train(const TrainOptions& options) {
  const auto train_docs = corpus::load_jsonl(options.train_path);
  const auto test_docs = corpus::load_jsonl(options.test_path);
  std::optional<std::vector<corpus::Document>> validation_docs;
  if (options.validation_path) validation_docs = corpus::load_jsonl(*options.validation_path);
  if (train_docs.empty()) throw DataError("training set is empty: " + options.train_path.string());
  if (test_docs.empty()) throw DataError("test set is empty: " + options.test_path.string());

  // The index map comes from the training split alone.
  const auto vocab = corpus::Vocabulary::build(train_docs);

  std::int64_t max_len = options.max_len;
  if (max_len == 0) {
    std::vector<std::int64_t> lengths;
    lengths.reserve(train_docs.size());
    for (const auto& doc : train_docs) {
      lengths.push_back(static_cast<std::int64_t>(corpus::tokenize(doc.text).size()));
    }
    max_len = corpus::compute_max_len(lengths, options.length_percentile);
  }

  const auto spec = zoo::ModelSpec::resolve(options.model_id, vocab.size(), max_len, options.hyper);

  fs::create_directories(options.out_dir);
  {
    std::ofstream out(options.out_dir / "config.json");
    if (!out) throw DataError("cannot write config: " + (options.out_dir / "config.json").string());
    out << resolved_config_json(options, spec).dump(2) << '\n';
  }
  spec.save(options.out_dir / "model.spec");
  vocab.save(options.out_dir / "vocab.tsv");

  train::RunReport report;
  const auto ckpt_dir = options.out_dir / "checkpoints";
  if (options.model_id == "baseline") {
    report = train::run_baseline(spec, train_docs, test_docs,
                                 validation_docs ? &*validation_docs : nullptr, vocab,
                                 options.baseline, ckpt_dir);
  } else {
    const auto train_batch = corpus::encode(train_docs, vocab, max_len);
    const auto test_batch = corpus::encode(test_docs, vocab, max_len);
    std::optional<corpus::EncodedBatch> validation_batch;
    if (validation_docs) validation_batch = corpus::encode(*validation_docs, vocab, max_len);
    report = train::run<float>(spec, train_batch, test_batch,
                               validation_batch ? &*validation_batch : nullptr, options.config,
                               ckpt_dir);
  }

  train::write_report(report, options.out_dir / "report.json");
  write_learning_curve(report, options.out_dir / "learning_curve.csv");
  metrics::write_roc_csv(report.test.roc, options.out_dir / "roc_test.csv");
  if (report.validation) {
    metrics::write_roc_csv(report.validation->roc, options.out_dir / "roc_validation.csv");
  }
  return report;
}

train::EvalResult cmd_evaluate(const EvaluateOptions& options) {
  const auto spec = zoo::ModelSpec::load(options.run_dir / "model.spec");
  const auto vocab = corpus::Vocabulary::load(options.run_dir / "vocab.tsv");
  if (vocab.size() != spec.vocab_size) {
    throw DataError("vocabulary size " + std::to_string(vocab.size()) +
                    " does not match the model spec's " + std::to_string(spec.vocab_size));
  }

  fs::path checkpoint_path;
  if (options.checkpoint) {
    checkpoint_path = *options.checkpoint;
  } else {
    std::ifstream in(options.run_dir / "report.json");
    if (!in) throw DataError("cannot read report: " + (options.run_dir / "report.json").string());
    const auto report = nlohmann::json::parse(in);
    checkpoint_path =
        options.run_dir / "checkpoints" / report.at("selected_checkpoint").get<std::string>();
  }
  if (!fs::exists(checkpoint_path)) {
    throw DataError("checkpoint not found: " + checkpoint_path.string());
  }

  const auto docs = corpus::load_jsonl(options.data_path);
  if (docs.empty()) throw DataError("dataset is empty: " + options.data_path.string());
  std::vector<int> labels;
  labels.reserve(docs.size());
  for (const auto& doc : docs) labels.push_back(doc.label);

  std::vector<double> scores;
  double threshold = 0.5;
  if (spec.model_id == "baseline") {
    const auto data = ckpt::load(checkpoint_path);
    ckpt::expect_layout(data, {{"baseline.weights", {spec.vocab_size}}, {"baseline.bias", {1}}});
    zoo::BaselineModel model;
    model.vocab = vocab;
    model.weights = data[0].values;
    model.bias = data[1].values[0];
    scores = model.scores(docs);
    threshold = 0.0;
  } else {
    auto model = zoo::build<float>(spec, 0, 0);
    ckpt::restore(ckpt::load(checkpoint_path), model.params);
    const auto batch = corpus::encode(docs, vocab, spec.max_len);
    scores = train::predict(model, batch);
  }

  train::EvalResult result;
  result.roc = metrics::roc(scores, labels);
  result.auc = result.roc.auc;
  result.accuracy = metrics::accuracy(scores, labels, threshold);

  const auto out_dir = options.out_dir.value_or(options.run_dir);
  fs::create_directories(out_dir);
  const auto stem = options.data_path.stem().string();
  metrics::write_roc_csv(result.roc, out_dir / ("roc_" + stem + ".csv"));
  ordered_json j;
  j["model_id"] = spec.model_id;
  j["checkpoint"] = checkpoint_path.string();
  j["data"] = options.data_path.string();
  j["auc"] = result.auc;
  j["accuracy"] = result.accuracy;
  j["threshold"] = threshold;
  std::ofstream out(out_dir / ("metrics_" + stem + ".json"));
  if (!out) throw DataError("cannot write metrics file");
  out << j.dump(2) << '\n';
  return result;
}

namespace {

std::vector<std::string> worker_argv(const CompareOptions& options, const std::string& model_id,
                                     const fs::path& cell_dir) {
  const auto& base = options.base;
  std::vector<std::string> argv = {
      options.self_exe.string(), "train",
      "--model", model_id,
      "--train", base.train_path.string(),
      "--test", base.test_path.string(),
      "--out", cell_dir.string(),
      "--seed-init", std::to_string(base.config.seed_init),
      "--seed-stochastic", std::to_string(base.config.seed_stochastic),
      "--max-epochs", std::to_string(base.config.max_epochs),
      "--batch-size", std::to_string(base.config.batch_size),
      "--learning-rate", std::to_string(base.config.learning_rate),
      "--stop-delta", std::to_string(base.config.stop_min_delta),
      "--stop-patience", std::to_string(base.config.stop_patience),
      "--hidden-size", std::to_string(base.hyper.hidden_size),
      "--conv-filters", std::to_string(base.hyper.conv_filters),
      "--kernel-width", std::to_string(base.hyper.conv_kernel_width),
      "--dense-units", std::to_string(base.hyper.dense_units),
      "--dropout", std::to_string(base.hyper.dropout_rate),
  };
  if (base.validation_path) {
    argv.push_back("--validation");
    argv.push_back(base.validation_path->string());
  }
  if (base.max_len > 0) {
    argv.push_back("--max-len");
    argv.push_back(std::to_string(base.max_len));
  }
  if (!base.config.shuffle) argv.push_back("--no-shuffle");
  return argv;
}

CompareRow row_from_report_file(const std::string& model_id, const fs::path& cell_dir) {
  CompareRow row;
  row.model_id = model_id;
  std::ifstream in(cell_dir / "report.json");
  if (!in) {
    row.error = "missing report";
    return row;
  }
  const auto j = nlohmann::json::parse(in);
  row.ok = true;
  row.test_auc = j.at("test").at("auc").get<double>();
  if (!j.at("validation").is_null()) {
    row.validation_auc = j.at("validation").at("auc").get<double>();
  }
  row.stop_epoch = j.at("stop_epoch").get<int>();
  return row;
}

}  // namespace

std::string format_compare_table(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "model" << std::right << std::setw(10) << "test_auc"
     << std::setw(16) << "validation_auc" << std::setw(12) << "stop_epoch" << "  status\n";
  for (const auto& row : rows) {
    os << std::left << std::setw(10) << row.model_id << std::right;
    if (row.ok) {
      os << std::setw(10) << std::fixed << std::setprecision(4) << row.test_auc;
      if (row.validation_auc) {
        os << std::setw(16) << std::fixed << std::setprecision(4) << *row.validation_auc;
      } else {
        os << std::setw(16) << "-";
      }
      os << std::setw(12) << row.stop_epoch << "  ok\n";
    } else {
      os << std::setw(10) << "-" << std::setw(16) << "-" << std::setw(12) << "-"
         << "  failed: " << row.error << '\n';
    }
  }
  return os.str();
}

std::vector<CompareRow> cmd_compare(const CompareOptions& options) {
  if (options.model_ids.empty()) throw UsageError("compare: no model ids given");
  for (const auto& id : options.model_ids) {
    const auto& known = zoo::ModelSpec::known_ids();
    if (std::find(known.begin(), known.end(), id) == known.end()) {
      throw UsageError("compare: unknown model id '" + id + "'");
    }
  }
  fs::create_directories(options.base.out_dir / "cells");

  std::vector<CompareRow> rows(options.model_ids.size());
  if (options.parallel <= 1) {
    for (std::size_t i = 0; i < options.model_ids.size(); ++i) {
      const auto& id = options.model_ids[i];
      TrainOptions cell = options.base;
      cell.model_id = id;
      cell.out_dir = options.base.out_dir / "cells" / id;
      rows[i].model_id = id;
      try {
        const auto report = cmd_train(cell);
        rows[i].ok = true;
        rows[i].test_auc = report.test.auc;
        if (report.validation) rows[i].validation_auc = report.validation->auc;
        rows[i].stop_epoch = report.stop_epoch;
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  } else {
    // Grid cells as worker processes, at most `parallel` in flight.
    std::vector<std::pair<pid_t, std::size_t>> running;
    std::size_t next = 0;
    auto reap_one = [&]() {
      int status = 0;
      const pid_t pid = ::wait(&status);
      if (pid < 0) return;
      for (auto it = running.begin(); it != running.end(); ++it) {
        if (it->first != pid) continue;
        const std::size_t i = it->second;
        running.erase(it);
        if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
          rows[i] = row_from_report_file(options.model_ids[i],
                                         options.base.out_dir / "cells" / options.model_ids[i]);
        } else {
          rows[i].model_id = options.model_ids[i];
          rows[i].error = "worker exited with status " + std::to_string(WEXITSTATUS(status));
        }
        return;
      }
    };
    while (next < options.model_ids.size() || !running.empty()) {
      if (next < options.model_ids.size() &&
          running.size() < static_cast<std::size_t>(options.parallel)) {
        const auto& id = options.model_ids[next];
        const auto argv_strings =
            worker_argv(options, id, options.base.out_dir / "cells" / id);
        std::vector<char*> argv;
        argv.reserve(argv_strings.size() + 1);
        for (const auto& s : argv_strings) argv.push_back(const_cast<char*>(s.c_str()));
        argv.push_back(nullptr);
        const pid_t pid = ::fork();
        if (pid == 0) {
          ::execv(argv[0], argv.data());
          ::_exit(127);
        }
        if (pid < 0) {
          rows[next].model_id = id;
          rows[next].error = "fork failed";
        } else {
          running.emplace_back(pid, next);
        }
        ++next;
      } else {
        reap_one();
      }
    }
  }

  std::ofstream csv(options.base.out_dir / "compare.csv");
  if (!csv) throw DataError("cannot write compare.csv");
  csv << "model,test_auc,validation_auc,stop_epoch,status\n";
  csv.precision(17);
  for (const auto& row : rows) {
    csv << row.model_id << ',';
    if (row.ok) {
      csv << row.test_auc << ',';
      if (row.validation_auc) csv << *row.validation_auc;
      csv << ',' << row.stop_epoch << ",ok\n";
    } else {
      csv << ",,,failed\n";
    }
  }
  std::ofstream txt(options.base.out_dir / "compare.txt");
  txt << format_compare_table(rows);
  return rows;
}

}  // namespace textclf::cmd
