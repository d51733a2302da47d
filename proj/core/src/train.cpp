#include "sarrain/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sarrain/error.hpp"
#include "sarrain/parallel.hpp"
#include "sarrain/rng.hpp"

namespace sarrain {

void TrainConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning rate must be >= 0");
  require(epochs >= 1, "epochs must be positive");
  require(batch_size >= 1, "batch size must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(adam_eps >= 0.0, "Adam epsilon must be non-negative");
  require(runs >= 1, "runs must be at least 1");
}

TrainSample make_sample(const Grid& input, const ClassMasks& target, const FilterBankSpec& bank,
                        const Grid* land) {
  require(target.m1.rows() == input.rows() && target.m1.cols() == input.cols(),
          "target masks must match the input geometry");
  require(land == nullptr || land->size() == input.size(), "land mask must match the input");
  TrainSample s;
  s.responses = filter_responses(input, bank);
  const std::size_t n = input.size();
  s.target.resize(kKochClasses * n);
  s.valid.resize(n);
  for (std::size_t px = 0; px < n; ++px) {
    bool ok = target.valid.values()[px] == 1.0f && !input.is_nodata(input.values()[px]);
    if (land != nullptr && land->values()[px] == 1.0f) ok = false;
    s.valid[px] = ok ? 1 : 0;
    s.valid_count += ok ? 1 : 0;
    for (std::size_t i = 0; i < kKochClasses; ++i) {
      s.target[i * n + px] = target.channel(i).values()[px] == 1.0f ? 1.0 : 0.0;
    }
  }
  return s;
}

LossGrad mse_loss(const Prediction& pred, const ClassMasks& target) {
  const std::size_t n = target.m1.size();
  for (std::size_t i = 0; i < kKochClasses; ++i) {
    require(pred.channel(i).rows() == target.m1.rows() && pred.channel(i).cols() == target.m1.cols(),
            "prediction and target geometry differ");
  }
  require(target.valid.size() == n, "target validity mask has the wrong size");
  std::size_t count = 0;
  for (std::size_t px = 0; px < n; ++px) count += target.valid.values()[px] == 1.0f ? 3 : 0;
  LossGrad out;
  out.grad.assign(kKochClasses * n, 0.0);
  if (count == 0) return out;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < kKochClasses; ++i) {
    for (std::size_t px = 0; px < n; ++px) {
      if (target.valid.values()[px] != 1.0f) continue;
      const double r = static_cast<double>(pred.channel(i).values()[px]) -
                       (target.channel(i).values()[px] == 1.0f ? 1.0 : 0.0);
      out.loss += r * r;
      out.grad[i * n + px] = 2.0 * r * inv;
    }
  }
  out.loss *= inv;
  return out;
}

LossGrad mse_loss(std::span<const double> pred, const TrainSample& sample) {
  const std::size_t n = sample.responses.size();
  require(pred.size() == kKochClasses * n, "prediction planes do not match the sample");
  LossGrad out;
  out.grad.assign(kKochClasses * n, 0.0);
  if (sample.valid_count == 0) return out;
  const double inv = 1.0 / static_cast<double>(kKochClasses * sample.valid_count);
  for (std::size_t i = 0; i < kKochClasses; ++i) {
    for (std::size_t px = 0; px < n; ++px) {
      if (!sample.valid[px]) continue;
      const double r = pred[i * n + px] - sample.target[i * n + px];
      out.loss += r * r;
      out.grad[i * n + px] = 2.0 * r * inv;
    }
  }
  out.loss *= inv;
  return out;
}

SampleTerms sample_terms(const TrainSample& sample, const KochParams& params, bool with_grad) {
  const std::size_t n = sample.responses.size();
  const auto& p = sample.responses.p;
  const double a = params.steepness;
  constexpr double kInvFilters = 1.0 / static_cast<double>(kKochFilters);
  SampleTerms out;
  out.count = kKochClasses * sample.valid_count;
  std::array<double, kKochFilters> s{};
  for (std::size_t i = 0; i < kKochClasses; ++i) {
    const auto& k = params.gain[i];
    const auto& b = params.bias[i];
    const double* t = sample.target.data() + i * n;
    std::array<double, kKochFilters> gk{}, gb{};
    for (std::size_t px = 0; px < n; ++px) {
      if (!sample.valid[px]) continue;
      double sq = 0.0;
      for (std::size_t j = 0; j < kKochFilters; ++j) {
        s[j] = sigmoid(k[j] * p[j][px] + b[j], a, params.center);
        sq += s[j] * s[j];
      }
      const double y = std::sqrt(sq * kInvFilters);
      const double r = y - t[px];
      out.sse += r * r;
      if (!with_grad || !(y > 0.0)) continue;
      const double scale = 2.0 * r * kInvFilters / y;
      for (std::size_t j = 0; j < kKochFilters; ++j) {
        const double dz = scale * s[j] * a * s[j] * (1.0 - s[j]);
        gk[j] += dz * p[j][px];
        gb[j] += dz;
      }
    }
    for (std::size_t j = 0; j < kKochFilters; ++j) {
      out.grad.gain[i][j] = gk[j];
      out.grad.bias[i][j] = gb[j];
    }
  }
  return out;
}

double dataset_loss(std::span<const TrainSample> samples, const KochParams& params) {
  std::vector<SampleTerms> terms(samples.size());
  parallel_for(samples.size(), [&](std::size_t k) { terms[k] = sample_terms(samples[k], params, false); });
  double sse = 0.0;
  std::size_t count = 0;
  for (const auto& t : terms) {
    sse += t.sse;
    count += t.count;
  }
  return count > 0 ? sse / static_cast<double>(count) : 0.0;
}

void Adam::step(KochParams& params, const KochGradient& grad) {
  ++t_;
  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < kKochParamCount; ++k) {
    const double g = grad[k];
    m_[k] = b1 * m_[k] + (1.0 - b1) * g;
    v_[k] = b2 * v_[k] + (1.0 - b2) * g * g;
    const double mhat = m_[k] / c1;
    const double vhat = v_[k] / c2;
    params[k] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
  }
}

TrainResult train(std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                  const TrainConfig& cfg, const KochParams& init) {
  cfg.validate();
  require(!train_set.empty(), "training set is empty");
  TrainResult result{init, {}, cfg.seed};
  auto& params = result.params;
  auto& hist = result.history;
  hist.initial_train_loss = dataset_loss(train_set, params);

  Adam adam(cfg);
  std::vector<std::size_t> order(train_set.size());
  std::vector<SampleTerms> terms;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    CounterRng rng(derive_seed(cfg.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));

    double epoch_sse = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      terms.assign(stop - start, {});
      parallel_for(stop - start, [&](std::size_t k) {
        terms[k] = sample_terms(train_set[order[start + k]], params);
      });
      double sse = 0.0;
      std::size_t count = 0;
      KochGradient grad;
      for (const auto& t : terms) {
        sse += t.sse;
        count += t.count;
        grad += t.grad;
      }
      if (!std::isfinite(sse)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch + 1));
      }
      if (count == 0) continue;
      const double inv = 1.0 / static_cast<double>(count);
      for (std::size_t k = 0; k < kKochParamCount; ++k) grad[k] *= inv;
      adam.step(params, grad);
      epoch_sse += sse;
      epoch_count += count;
    }
    const double epoch_loss = epoch_count > 0 ? epoch_sse / static_cast<double>(epoch_count) : 0.0;
    for (std::size_t k = 0; k < kKochParamCount; ++k) {
      if (!std::isfinite(params[k])) {
        throw DivergenceError("non-finite parameter after epoch " + std::to_string(epoch + 1));
      }
    }
    hist.train_loss.push_back(epoch_loss);
    hist.val_loss.push_back(val_set.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : dataset_loss(val_set, params));
  }
  hist.final_train_loss = dataset_loss(train_set, params);
  if (!std::isfinite(hist.final_train_loss)) {
    throw DivergenceError("non-finite training loss at epoch " + std::to_string(cfg.epochs));
  }
  return result;
}

std::vector<TrainResult> train_runs(std::span<const TrainSample> train_set,
                                    std::span<const TrainSample> val_set, const TrainConfig& cfg,
                                    const KochParams& init) {
  cfg.validate();
  std::vector<TrainResult> out;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + r;
    out.push_back(train(train_set, val_set, run_cfg, init));
  }
  return out;
}

namespace {

// Sum over valid pixels of (y+ - t)^2 - (y- - t)^2 where y+/y- move one parameter by +/- eps.
// Each pixel's difference is formed directly, so tiny gradients are not lost to cancellation
// against the full loss.
double loss_difference(const TrainSample& sample, const KochParams& params, std::size_t i, std::size_t j,
                       bool bias, double eps) {
  const std::size_t n = sample.responses.size();
  const auto& p = sample.responses.p;
  const double a = params.steepness, c = params.center;
  constexpr double kInvFilters = 1.0 / static_cast<double>(kKochFilters);
  const double* t = sample.target.data() + i * n;
  double sum = 0.0;
  for (std::size_t px = 0; px < n; ++px) {
    if (!sample.valid[px]) continue;
    double other = 0.0;
    for (std::size_t q = 0; q < kKochFilters; ++q) {
      if (q == j) continue;
      const double sq = sigmoid(params.gain[i][q] * p[q][px] + params.bias[i][q], a, c);
      other += sq * sq;
    }
    const double x = bias ? 1.0 : p[j][px];
    const double z = params.gain[i][j] * p[j][px] + params.bias[i][j];
    const double up = a * (z + eps * x - c), dn = a * (z - eps * x - c);
    const double sp = 1.0 / (1.0 + std::exp(-up));
    const double not_sm = 1.0 / (1.0 + std::exp(dn));
    const double sm = 1.0 - not_sm;
    // sigma(u) - sigma(v) = sigma(u) (1 - sigma(v)) (1 - e^-(u - v))
    const double ds = -sp * not_sm * std::expm1(-2.0 * a * eps * x);
    const double yp = std::sqrt((other + sp * sp) * kInvFilters);
    const double ym = std::sqrt((other + sm * sm) * kInvFilters);
    if (!(yp + ym > 0.0)) continue;
    const double dy = ds * (sp + sm) * kInvFilters / (yp + ym);
    sum += dy * (yp + ym - 2.0 * t[px]);
  }
  return sum;
}

}  // namespace

GradCheck grad_check(const KochParams& params, const TrainSample& sample, double eps, double floor) {
  require(eps > 0.0 && eps <= 1e-2, "finite-difference step must lie in (0, 1e-2]");
  require(sample.valid_count > 0, "gradient check needs valid pixels");
  GradCheck out;
  const double inv = 1.0 / static_cast<double>(kKochClasses * sample.valid_count);
  const auto terms = sample_terms(sample, params);
  for (std::size_t k = 0; k < kKochParamCount; ++k) {
    out.analytic[k] = terms.grad[k] * inv;
    const bool bias = k >= kKochClasses * kKochFilters;
    const std::size_t flat = bias ? k - kKochClasses * kKochFilters : k;
    const double diff = loss_difference(sample, params, flat / kKochFilters, flat % kKochFilters, bias, eps);
    out.numeric[k] = diff * inv / (2.0 * eps);
    const double a = out.analytic[k], nmr = out.numeric[k];
    const double denom = std::max({std::abs(a), std::abs(nmr), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(a - nmr) / denom);
  }
  return out;
}

GradCheck grad_check(const KochParams& params, const Grid& input, const ClassMasks& target,
                     const FilterBankSpec& bank, double eps, double floor) {
  return grad_check(params, make_sample(input, target, bank), eps, floor);
}

}  // namespace sarrain
