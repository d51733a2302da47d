#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sarrain/raster.hpp"

namespace sarrain {

inline constexpr std::size_t kKochFilters = 4;
inline constexpr std::size_t kKochClasses = 3;
inline constexpr std::size_t kKochParamCount = 2 * kKochFilters * kKochClasses;

/// Four zero-DC high-pass filters, each "identity minus box mean" over a
/// square window. Window w covers offsets [-(w-1)/2, w/2] around the pixel.
struct FilterBankSpec {
  std::array<std::size_t, kKochFilters> windows = {2, 4, 8, 16};

  void validate() const;
  std::size_t max_window() const;
  /// Dense w x w kernel of filter j, row-major.
  std::vector<double> kernel(std::size_t j) const;

  bool operator==(const FilterBankSpec&) const = default;
};

using KochMatrix = std::array<std::array<double, kKochFilters>, kKochClasses>;

/// Per-class, per-filter affine scaling applied to the high-pass responses
/// before the sigmoid. Class 0/1/2 = rain >= 1/3/10 mm/h.
struct KochParams {
  KochMatrix gain{};  // K[i][j]
  KochMatrix bias{};  // B[i][j]
  double steepness = 4.0;
  double center = 0.5;
  double resolution_m = 400.0;

  /// Flat view: gains in [0, 12), biases in [12, 24), class-major.
  double& operator[](std::size_t flat);
  double operator[](std::size_t flat) const;

  /// Scaling that maps response `lower[j]` to 0 and `upper[j]` to 1 in
  /// every class, the way the binary detector maps its filter outputs.
  static KochParams from_bounds(const std::array<double, kKochFilters>& lower,
                                const std::array<double, kKochFilters>& upper,
                                double resolution_m);
  /// Reference binary-detector scaling used to initialize training.
  static KochParams reference(double resolution_m = 400.0);

  bool operator==(const KochParams&) const = default;
};

/// Parameter-shaped gradient.
struct KochGradient {
  KochMatrix gain{};
  KochMatrix bias{};

  double& operator[](std::size_t flat);
  double operator[](std::size_t flat) const;
  KochGradient& operator+=(const KochGradient& other);
};

/// High-pass responses of one input raster, kept in double precision so the
/// forward/backward passes are smooth enough for finite-difference checks.
struct FilterResponses {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::array<std::vector<double>, kKochFilters> p;

  std::size_t size() const noexcept { return rows * cols; }
};

/// Responses with mirror (edge-inclusive) padding. Nodata cells are filled
/// with the mean of valid cells before filtering.
FilterResponses filter_responses(const Grid& input, const FilterBankSpec& spec);
std::array<Grid, kKochFilters> highpass_bank(const Grid& input, const FilterBankSpec& spec);

double sigmoid(double x, double steepness = 4.0, double center = 0.5) noexcept;

/// Three real-valued channel grids in [0, 1].
struct Prediction {
  Grid y1;
  Grid y3;
  Grid y10;

  const Grid& channel(std::size_t i) const;
  Grid& channel(std::size_t i);
};

enum class Activation { Sigmoid, Clip };

/// y_i = sqrt(mean_j act(K[i][j] * P_j + B[i][j])^2), written to out as
/// three consecutive planes of responses.size() values.
void koch_forward(const FilterResponses& responses, const KochParams& params,
                  Activation activation, std::span<double> out);

Prediction koch_forward(const Grid& input, const KochParams& params,
                        const FilterBankSpec& spec);
/// Original construction: hard clip to [0, 1] instead of the sigmoid.
Prediction koch_forward_clipped(const Grid& input, const KochParams& params,
                                const FilterBankSpec& spec);

/// Binary detector: clipped RMS of class row 0 of `reference`, then >= threshold.
Grid koch_binary(const Grid& input, const FilterBankSpec& spec, const KochParams& reference,
                 double threshold);

/// Exact gradient of sum(grad_y * y) with respect to every K and B. grad_y
/// holds three planes like the forward output.
KochGradient koch_backward(const FilterResponses& responses, const KochParams& params,
                           std::span<const double> grad_y);
KochGradient koch_backward(const Grid& input, const KochParams& params,
                           const FilterBankSpec& spec, const Prediction& grad_y);

/// Serialized model: {"a","c","K","B","scales","resolution_m"}.
struct KochModel {
  KochParams params;
  FilterBankSpec bank;
};

std::string to_json(const KochModel& model);
KochModel koch_model_from_json(std::string_view json);
void save_koch_model(const KochModel& model, const std::filesystem::path& path);
KochModel load_koch_model(const std::filesystem::path& path);

}  // namespace sarrain
