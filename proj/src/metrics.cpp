#include "textclf/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "textclf/errors.hpp"

namespace textclf::metrics {

namespace {

void check_two_classes(std::span<const double> scores, std::span<const int> labels,
                       std::int64_t& n_pos, std::int64_t& n_neg) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  n_pos = n_neg = 0;
  for (const int y : labels) {
    if (y == 1) {
      ++n_pos;
    } else if (y == 0) {
      ++n_neg;
    } else {
      throw std::invalid_argument("labels must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("AUC undefined: labels contain a single class");
  }
}

}  // namespace

RocCurve roc(std::span<const double> scores, std::span<const int> labels) {
  std::int64_t n_pos = 0, n_neg = 0;
  check_two_classes(scores, labels, n_pos, n_neg);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    // Every sample tied at this score moves in one step.
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos)});
  }

  double auc = 0.0;
  for (std::size_t p = 1; p < curve.points.size(); ++p) {
    const auto& a = curve.points[p - 1];
    const auto& b = curve.points[p];
    auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  curve.auc = auc;
  return curve;
}

double auc_pairwise(std::span<const double> scores, std::span<const int> labels) {
  std::int64_t n_pos = 0, n_neg = 0;
  check_two_classes(scores, labels, n_pos, n_neg);
  std::vector<double> pos, neg;
  pos.reserve(static_cast<std::size_t>(n_pos));
  neg.reserve(static_cast<std::size_t>(n_neg));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (labels[i] == 1 ? pos : neg).push_back(scores[i]);
  }
  double credit = 0.0;
  for (const double p : pos) {
    for (const double n : neg) {
      if (p > n) {
        credit += 1.0;
      } else if (p == n) {
        credit += 0.5;
      }
    }
  }
  return credit / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  if (scores.empty()) return 0.0;
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int predicted = scores[i] >= threshold ? 1 : 0;
    if (predicted == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ROC CSV: " + path.string());
  out << "threshold,fpr,tpr\n";
  out.precision(17);
  for (const auto& p : curve.points) {
    out << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
  }
}

}  // namespace textclf::metrics
