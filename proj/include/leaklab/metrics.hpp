#pragma once

#include <optional>
#include <vector>

namespace leaklab {

// Scores paired with binary ground-truth labels. AUC requires both classes
// to be present; accuracy/precision only need a nonempty set.
struct BinaryEval {
  std::vector<double> scores;
  std::vector<int> labels;  // 0/1
  double threshold = 0.5;
};

// Rank-based Mann-Whitney AUC with average ranks for ties:
// P(score+ > score-) + 0.5 * P(tie). Throws MetricError if only one class
// is present.
double auc(const BinaryEval& eval);

// Fraction of points with (score >= threshold) == label.
double accuracy(const BinaryEval& eval);

// Per-class precision at the eval threshold. An empty predicted class yields
// an empty optional rather than a sentinel value.
struct ClassPrecision {
  std::optional<double> positive;  // TP / (TP + FP)
  std::optional<double> negative;  // TN / (TN + FN)
};
ClassPrecision precision_per_class(const BinaryEval& eval);

// Sample Pearson correlation. Throws MetricError when either input is
// constant or the lengths differ / are < 2.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace leaklab
