#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sarrain/koch.hpp"
#include "sarrain/raster.hpp"

namespace sarrain {

/// counts[t * n + p]: pixels with truth t and prediction p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n = 2);

  std::size_t classes() const noexcept { return n_; }
  std::uint64_t operator()(std::size_t truth, std::size_t pred) const {
    return counts_[truth * n_ + pred];
  }
  std::uint64_t& operator()(std::size_t truth, std::size_t pred) {
    return counts_[truth * n_ + pred];
  }
  std::uint64_t total() const noexcept;

  ConfusionMatrix& merge(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

struct MacroScores {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

/// Mean diagonal of the row- and column-normalized matrix; empty rows or
/// columns contribute 0. Throws UndefinedMetricError on an all-zero matrix.
MacroScores macro_scores(const ConfusionMatrix& cm);
double macro_f1(const ConfusionMatrix& cm);

/// 0..3: the largest i with channel i > cut.
Grid labels_from_channels(const Prediction& pred, double cut = 0.5);

/// Counts pixels where valid == 1. Labels >= n raise DataError.
ConfusionMatrix confusion(const Grid& pred_labels, const Grid& true_labels, std::size_t n,
                          const Grid& valid);

ConfusionMatrix binary_confusion(const Grid& pred_mask, const Grid& true_mask, const Grid& valid);
double binary_f1(const Grid& pred_mask, const Grid& true_mask, const Grid& valid);

enum class StratMetric { F1, DetectionProbability };

struct StratifiedCurve {
  std::vector<double> edges;             // bin b is [edges[b], edges[b+1]); last bin open
  std::vector<std::optional<double>> value;  // empty bin -> nullopt
  std::vector<std::uint64_t> count;
  StratMetric metric = StratMetric::F1;

  std::size_t bins() const noexcept { return edges.size(); }
};

/// Values below the first edge fall in the first bin.
std::size_t strat_bin(std::span<const double> edges, double value);

StratifiedCurve stratified(const Grid& pred_mask, const Grid& true_mask, const Grid& strat,
                           const Grid& valid, std::span<const double> edges,
                           StratMetric metric = StratMetric::F1);

/// Mean and population standard deviation over runs.
struct RunStats {
  double mean = 0.0;
  double std = 0.0;
};
RunStats run_stats(std::span<const double> values);
/// "0.812 (0.013)".
std::string format_mean_std(const RunStats& s, int precision = 3);

}  // namespace sarrain
