// textclf: generate synthetic note corpora, train the model zoo, evaluate
// checkpoints, and reproduce the comparison grid.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "textclf/commands.hpp"
#include "textclf/errors.hpp"

namespace {

using textclf::cmd::CompareOptions;
using textclf::cmd::EvaluateOptions;
using textclf::cmd::GenerateOptions;
using textclf::cmd::TrainOptions;

void add_train_flags(CLI::App* app, TrainOptions& options, bool require_model) {
  if (require_model) {
    app->add_option("--model", options.model_id, "Model id: a..l or baseline")->required();
  }
  app->add_option("--train", options.train_path, "Training set (JSONL)")->required();
  app->add_option("--test", options.test_path, "Test set (JSONL)")->required();
  app->add_option("--validation", options.validation_path, "Validation set (JSONL)");
  app->add_option("--out", options.out_dir, "Output directory")->required();
  app->add_option("--seed-init", options.config.seed_init, "Seed for parameter initialization");
  app->add_option("--seed-stochastic", options.config.seed_stochastic,
                  "Seed for shuffling and dropout");
  app->add_option("--max-epochs", options.config.max_epochs, "Epoch budget");
  app->add_option("--batch-size", options.config.batch_size, "Batch size");
  app->add_option("--learning-rate", options.config.learning_rate, "Adam learning rate");
  app->add_option("--stop-delta", options.config.stop_min_delta,
                  "Early stop: minimum loss improvement");
  app->add_option("--stop-patience", options.config.stop_patience,
                  "Early stop: epochs without improvement");
  app->add_flag_callback("--no-shuffle", [&options] { options.config.shuffle = false; },
                         "Keep the training order fixed");
  app->add_option("--max-len", options.max_len,
                  "Sequence length (0 = percentile of training lengths)");
  app->add_option("--length-percentile", options.length_percentile,
                  "Percentile for the derived sequence length");
  app->add_option("--hidden-size", options.hyper.hidden_size, "LSTM hidden units");
  app->add_option("--conv-filters", options.hyper.conv_filters, "Convolution filters");
  app->add_option("--kernel-width", options.hyper.conv_kernel_width, "Convolution kernel width");
  app->add_option("--dense-units", options.hyper.dense_units, "Dense layer units");
  app->add_option("--pool-width", options.hyper.pool_width, "Max pool width");
  app->add_option("--pool-stride", options.hyper.pool_stride, "Max pool stride");
  app->add_option("--dropout", options.hyper.dropout_rate, "Dropout rate");
  app->add_option("--embedding-dim", options.hyper.embedding_dim,
                  "Embedding dimension (0 = fourth root of vocabulary size)");
  app->add_option("--baseline-l2", options.baseline.l2, "Baseline L2 regularization");
  app->add_option("--baseline-epochs", options.baseline.epochs, "Baseline epochs");
  app->add_option("--baseline-lr", options.baseline.learning_rate, "Baseline learning rate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-text note classification experiments"};
  app.require_subcommand(1);

  GenerateOptions generate_options;
  auto* generate = app.add_subcommand("generate", "Write a synthetic labeled corpus");
  generate->add_option("--out", generate_options.out_dir, "Output directory")->required();
  generate->add_option("--docs-per-split", generate_options.spec.n_docs, "Documents per split");
  generate->add_option("--positive-fraction", generate_options.spec.positive_fraction,
                       "Fraction of positive documents");
  generate->add_option("--vocab-size", generate_options.spec.vocab_size, "Vocabulary size");
  generate->add_option("--marker-words", generate_options.spec.n_marker_words,
                       "Words enriched in the positive class");
  generate->add_option("--marker-probability", generate_options.spec.marker_probability,
                       "Per-slot marker rate in positive documents");
  generate->add_option("--mean-length", generate_options.spec.mean_length, "Mean document length");
  generate->add_option("--length-jitter", generate_options.spec.length_jitter,
                       "Uniform length jitter");
  generate->add_option("--seed", generate_options.spec.seed, "Corpus seed");
  generate->add_option("--shift-fraction", generate_options.shift_fraction,
                       "Marker drift applied to the validation split");

  TrainOptions train_options;
  auto* train = app.add_subcommand("train", "Train one model and write a run report");
  add_train_flags(train, train_options, /*require_model=*/true);

  EvaluateOptions evaluate_options;
  auto* evaluate = app.add_subcommand("evaluate", "Score a dataset with a trained checkpoint");
  evaluate->add_option("--run", evaluate_options.run_dir, "Run directory")->required();
  evaluate->add_option("--data", evaluate_options.data_path, "Dataset (JSONL)")->required();
  evaluate->add_option("--checkpoint", evaluate_options.checkpoint,
                       "Checkpoint file (default: the run's selected epoch)");
  evaluate->add_option("--out", evaluate_options.out_dir, "Output directory (default: run dir)");

  CompareOptions compare_options;
  std::string compare_models;
  auto* compare = app.add_subcommand("compare", "Train a grid of models and tabulate results");
  compare->add_option("--models", compare_models, "Comma-separated model ids")->required();
  compare->add_option("--parallel", compare_options.parallel, "Worker processes");
  add_train_flags(compare, compare_options.base, /*require_model=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return textclf::cmd::kExitUsage;
  }

  try {
    if (*generate) {
      textclf::cmd::cmd_generate(generate_options);
      std::cout << "wrote train/test/validation splits under " << generate_options.out_dir.string()
                << "\n";
    } else if (*train) {
      const auto report = textclf::cmd::cmd_train(train_options);
      std::cout << "model " << report.spec.model_id << ": stop_epoch=" << report.stop_epoch
                << " selected_epoch=" << report.selected_epoch << " test_auc=" << report.test.auc;
      if (report.validation) std::cout << " validation_auc=" << report.validation->auc;
      std::cout << "\nreport: " << (train_options.out_dir / "report.json").string() << "\n";
    } else if (*evaluate) {
      const auto result = textclf::cmd::cmd_evaluate(evaluate_options);
      std::cout << "auc=" << result.auc << " accuracy=" << result.accuracy << "\n";
    } else if (*compare) {
      std::stringstream ids(compare_models);
      std::string id;
      while (std::getline(ids, id, ',')) {
        if (!id.empty()) compare_options.model_ids.push_back(id);
      }
      compare_options.self_exe = std::filesystem::canonical("/proc/self/exe");
      const auto rows = textclf::cmd::cmd_compare(compare_options);
      std::cout << textclf::cmd::format_compare_table(rows);
    }
  } catch (const textclf::cmd::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return textclf::cmd::kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return textclf::cmd::kExitUsage;
  } catch (const textclf::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return textclf::cmd::kExitData;
  } catch (const textclf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return textclf::cmd::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return textclf::cmd::kExitInternal;
  }
  return textclf::cmd::kExitOk;
}
