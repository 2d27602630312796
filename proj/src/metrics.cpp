#include "leaklab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "leaklab/errors.hpp"

namespace leaklab {

namespace {

void check_lengths(const BinaryEval& eval) {
  if (eval.scores.size() != eval.labels.size()) {
    throw MetricError("score/label length mismatch: " +
                      std::to_string(eval.scores.size()) + " vs " +
                      std::to_string(eval.labels.size()));
  }
  if (eval.scores.empty()) throw MetricError("empty evaluation set");
}

}  // namespace

double auc(const BinaryEval& eval) {
  check_lengths(eval);
  const std::size_t n = eval.scores.size();
  std::size_t n_pos = 0;
  for (int l : eval.labels) n_pos += (l == 1);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw MetricError("AUC undefined: evaluation set contains a single class");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return eval.scores[a] < eval.scores[b];
  });

  // Sum of average ranks (1-based) over the positive class.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && eval.scores[order[j]] == eval.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (eval.labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(const BinaryEval& eval) {
  check_lengths(eval);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < eval.scores.size(); ++i) {
    const int predicted = eval.scores[i] >= eval.threshold ? 1 : 0;
    hits += (predicted == eval.labels[i]);
  }
  return static_cast<double>(hits) / static_cast<double>(eval.scores.size());
}

ClassPrecision precision_per_class(const BinaryEval& eval) {
  check_lengths(eval);
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < eval.scores.size(); ++i) {
    const int predicted = eval.scores[i] >= eval.threshold ? 1 : 0;
    if (predicted == 1) {
      (eval.labels[i] == 1 ? tp : fp)++;
    } else {
      (eval.labels[i] == 0 ? tn : fn)++;
    }
  }
  ClassPrecision out;
  if (tp + fp > 0) out.positive = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tn + fn > 0) out.negative = static_cast<double>(tn) / static_cast<double>(tn + fn);
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw MetricError("pearson: length mismatch");
  if (x.size() < 2) throw MetricError("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw MetricError("pearson: correlation undefined for a constant vector");
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace leaklab
