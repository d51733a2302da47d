#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sarrain/koch.hpp"
#include "sarrain/rain_label.hpp"

namespace sarrain {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t runs = 5;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;  // mean loss over the epoch's mini-batches
  std::vector<double> val_loss;    // full validation set after each epoch; NaN without one
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
};

/// Precomputed filter responses plus the 3-channel target. Pixels with
/// weight 0 (land, radar nodata) do not enter the loss.
struct TrainSample {
  FilterResponses responses;
  std::vector<double> target;  // 3 planes
  std::vector<unsigned char> valid;
  std::size_t valid_count = 0;
};

/// `land` may be empty; otherwise land pixels are excluded too.
TrainSample make_sample(const Grid& input, const ClassMasks& target, const FilterBankSpec& bank,
                        const Grid* land = nullptr);

struct LossGrad {
  double loss = 0.0;  // mean over valid pixels x 3 channels
  std::vector<double> grad;  // 3 planes, 2 (y - t) / N, zero on invalid pixels
};

/// MSE between a prediction and the class masks over valid pixels.
LossGrad mse_loss(const Prediction& pred, const ClassMasks& target);
LossGrad mse_loss(std::span<const double> pred_planes, const TrainSample& sample);

/// Sum of squared errors and its parameter gradient in a single pass.
struct SampleTerms {
  double sse = 0.0;
  std::size_t count = 0;  // valid pixels x 3
  KochGradient grad;      // of sse
};
SampleTerms sample_terms(const TrainSample& sample, const KochParams& params, bool with_grad = true);

/// Pooled MSE of a sample set (0 when it has no valid pixels).
double dataset_loss(std::span<const TrainSample> samples, const KochParams& params);

class Adam {
 public:
  explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}
  void step(KochParams& params, const KochGradient& grad);
  std::size_t steps() const noexcept { return t_; }

 private:
  TrainConfig cfg_;
  std::array<double, kKochParamCount> m_{};
  std::array<double, kKochParamCount> v_{};
  std::size_t t_ = 0;
};

struct TrainResult {
  KochParams params;
  TrainHistory history;
  std::uint64_t seed = 0;
};

/// Single run with cfg.seed; cfg.runs is ignored.
TrainResult train(std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                  const TrainConfig& cfg, const KochParams& init);

/// cfg.runs runs with seeds seed .. seed + runs - 1.
std::vector<TrainResult> train_runs(std::span<const TrainSample> train_set,
                                    std::span<const TrainSample> val_set, const TrainConfig& cfg,
                                    const KochParams& init);

struct GradCheck {
  double max_rel_error = 0.0;
  std::array<double, kKochParamCount> analytic{};
  std::array<double, kKochParamCount> numeric{};
};

/// Analytic gradient of the sample MSE against central differences for all
/// 24 parameters. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheck grad_check(const KochParams& params, const TrainSample& sample, double eps = 1e-4,
                     double floor = 1e-8);
GradCheck grad_check(const KochParams& params, const Grid& input, const ClassMasks& target,
                     const FilterBankSpec& bank, double eps = 1e-4, double floor = 1e-8);

}  // namespace sarrain
