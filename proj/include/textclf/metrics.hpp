#pragma once
// ROC curves, AUC, and threshold accuracy.

#include <filesystem>
#include <span>
#include <vector>

namespace textclf::metrics {

struct RocPoint {
  double threshold;  // +inf for the initial (0,0) point
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // monotone staircase from (0,0) to (1,1)
  double auc = 0.0;              // trapezoidal integral of the points
};

/// Threshold sweep over distinct score values, descending; tied scores
/// collapse into one step (a diagonal segment when both classes tie).
RocCurve roc(std::span<const double> scores, std::span<const int> labels);

/// Probability that a random positive outranks a random negative, ties
/// credited 1/2. Counted directly over all (positive, negative) pairs; agrees
/// with roc().auc to machine precision by construction of the tie handling.
double auc_pairwise(std::span<const double> scores, std::span<const int> labels);

/// Fraction of correct decisions; a score exactly at the threshold counts as
/// a positive prediction.
double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

/// CSV with header "threshold,fpr,tpr".
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

}  // namespace textclf::metrics
