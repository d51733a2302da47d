#include "sarrain/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sarrain/error.hpp"

namespace sarrain {

ConfusionMatrix::ConfusionMatrix(std::size_t n) : n_(n), counts_(n * n, 0) {
  require(n >= 1, "confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::merge(const ConfusionMatrix& other) {
  require(other.n_ == n_, "cannot merge confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

MacroScores macro_scores(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedMetricError("macro F1 of an empty confusion matrix");
  const std::size_t n = cm.classes();
  double recall = 0.0, precision = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += cm(k, j);
      col += cm(j, k);
    }
    const auto diag = static_cast<double>(cm(k, k));
    if (row > 0) recall += diag / static_cast<double>(row);
    if (col > 0) precision += diag / static_cast<double>(col);
  }
  recall /= static_cast<double>(n);
  precision /= static_cast<double>(n);
  const double f1 = recall + precision > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return {recall, precision, f1};
}

double macro_f1(const ConfusionMatrix& cm) { return macro_scores(cm).f1; }

Grid labels_from_channels(const Prediction& pred, double cut) {
  Grid out = Grid::mask(pred.y1.geometry());
  out.set_timestamp(pred.y1.timestamp());
  for (std::size_t i = 0; i < out.size(); ++i) {
    float label = 0.0f;
    for (std::size_t k = 0; k < 3; ++k) {
      if (static_cast<double>(pred.channel(k).values()[i]) > cut) label = static_cast<float>(k + 1);
    }
    out.values()[i] = label;
  }
  return out;
}

ConfusionMatrix confusion(const Grid& pred_labels, const Grid& true_labels, std::size_t n,
                          const Grid& valid) {
  require(pred_labels.rows() == true_labels.rows() && pred_labels.cols() == true_labels.cols() &&
              valid.rows() == true_labels.rows() && valid.cols() == true_labels.cols(),
          "confusion inputs must share geometry");
  ConfusionMatrix cm(n);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    if (valid.values()[i] != 1.0f) continue;
    const float t = true_labels.values()[i];
    const float p = pred_labels.values()[i];
    if (!(t >= 0.0f) || !(p >= 0.0f) || t >= static_cast<float>(n) || p >= static_cast<float>(n) ||
        t != std::floor(t) || p != std::floor(p)) {
      throw DataError("label outside [0, " + std::to_string(n) + ") at pixel " + std::to_string(i));
    }
    ++cm(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

ConfusionMatrix binary_confusion(const Grid& pred_mask, const Grid& true_mask, const Grid& valid) {
  return confusion(pred_mask, true_mask, 2, valid);
}

double binary_f1(const Grid& pred_mask, const Grid& true_mask, const Grid& valid) {
  return macro_f1(binary_confusion(pred_mask, true_mask, valid));
}

std::size_t strat_bin(std::span<const double> edges, double value) {
  std::size_t b = 0;
  for (std::size_t k = 1; k < edges.size(); ++k) b += value >= edges[k] ? 1 : 0;
  return b;
}

StratifiedCurve stratified(const Grid& pred_mask, const Grid& true_mask, const Grid& strat,
                           const Grid& valid, std::span<const double> edges, StratMetric metric) {
  require(!edges.empty(), "stratification needs at least one bin edge");
  for (std::size_t k = 1; k < edges.size(); ++k) {
    require(edges[k - 1] < edges[k], "stratification edges must increase");
  }
  require(strat.rows() == true_mask.rows() && strat.cols() == true_mask.cols(),
          "stratification layer must be co-registered");
  require(pred_mask.size() == true_mask.size() && valid.size() == true_mask.size(),
          "stratified inputs must share geometry");

  std::vector<ConfusionMatrix> parts(edges.size(), ConfusionMatrix(2));
  for (std::size_t i = 0; i < true_mask.size(); ++i) {
    if (valid.values()[i] != 1.0f) continue;
    const float s = strat.values()[i];
    if (strat.is_nodata(s)) continue;
    const float t = true_mask.values()[i];
    const float p = pred_mask.values()[i];
    if ((t != 0.0f && t != 1.0f) || (p != 0.0f && p != 1.0f)) {
      throw DataError("stratified metrics need binary masks, pixel " + std::to_string(i));
    }
    ++parts[strat_bin(edges, s)](static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }

  StratifiedCurve curve;
  curve.edges.assign(edges.begin(), edges.end());
  curve.metric = metric;
  for (const auto& cm : parts) {
    curve.count.push_back(cm.total());
    if (metric == StratMetric::F1) {
      curve.value.push_back(cm.total() > 0 ? std::optional(macro_f1(cm)) : std::nullopt);
    } else {
      const auto positives = cm(1, 0) + cm(1, 1);
      curve.value.push_back(positives > 0 ? std::optional(static_cast<double>(cm(1, 1)) /
                                                          static_cast<double>(positives))
                                          : std::nullopt);
    }
  }
  return curve;
}

RunStats run_stats(std::span<const double> values) {
  require(!values.empty(), "run statistics need at least one value");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

std::string format_mean_std(const RunStats& s, int precision) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f (%.*f)", precision, s.mean, precision, s.std);
  return buf;
}

}  // namespace sarrain
