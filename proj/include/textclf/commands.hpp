#pragma once
// Command implementations behind the CLI: dataset generation, training runs,
// checkpoint evaluation, and the model comparison grid. Every run directory
// is self-describing: resolved config + model spec + vocabulary + checkpoints
// + report re-execute and re-evaluate bit-identically.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "textclf/corpus.hpp"
#include "textclf/train.hpp"
#include "textclf/zoo.hpp"

namespace textclf::cmd {

// Exit codes, also documented in the README.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct GenerateOptions {
  corpus::SyntheticSpec spec;    // per-split document count and distribution
  double shift_fraction = 0.75;  // marker drift applied to the validation split
  std::filesystem::path out_dir;
};

/// Writes train.jsonl / test.jsonl / validation.jsonl (disjoint seeded draws,
/// stratified) plus manifest.json into out_dir.
void cmd_generate(const GenerateOptions& options);

struct TrainOptions {
  std::string model_id;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::optional<std::filesystem::path> validation_path;
  std::filesystem::path out_dir;
  train::TrainConfig config;
  zoo::ModelHyper hyper;
  std::int64_t max_len = 0;  // 0 = percentile rule over training lengths
  double length_percentile = 0.99;
  zoo::BaselineConfig baseline;  // used when model_id == "baseline"
};

/// Trains one model into a fresh run directory; returns the report.
train::RunReport cmd_train(const TrainOptions& options);

struct EvaluateOptions {
  std::filesystem::path run_dir;
  std::filesystem::path data_path;
  std::optional<std::filesystem::path> checkpoint;  // default: selected epoch
  std::optional<std::filesystem::path> out_dir;     // default: run_dir
};

/// Scores a dataset with a trained run's checkpoint; writes a metrics JSON
/// and a ROC CSV named after the dataset file.
train::EvalResult cmd_evaluate(const EvaluateOptions& options);

struct CompareOptions {
  std::vector<std::string> model_ids;
  TrainOptions base;               // shared data paths and hyperparameters
  int parallel = 1;                // worker processes; 1 = in-process serial
  std::filesystem::path self_exe;  // needed for parallel workers
};

struct CompareRow {
  std::string model_id;
  bool ok = false;
  double test_auc = 0.0;
  std::optional<double> validation_auc;
  int stop_epoch = 0;
  std::string error;
};

/// One row per model id (same columns as the consolidated results table);
/// emits compare.csv and compare.txt. A failed cell marks its row and the
/// grid continues.
std::vector<CompareRow> cmd_compare(const CompareOptions& options);

std::string format_compare_table(const std::vector<CompareRow>& rows);

}  // namespace textclf::cmd
