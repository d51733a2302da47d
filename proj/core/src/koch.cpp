#include "sarrain/koch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sarrain/error.hpp"

namespace sarrain {

// ---- filter bank ------------------------------------------------------------

void FilterBankSpec::validate() const {
  for (auto w : windows) require(w >= 2, "filter windows must be at least 2 px");
}

std::size_t FilterBankSpec::max_window() const {
  return *std::max_element(windows.begin(), windows.end());
}

std::vector<double> FilterBankSpec::kernel(std::size_t j) const {
  const std::size_t w = windows.at(j);
  const double inv = 1.0 / static_cast<double>(w * w);
  std::vector<double> k(w * w, -inv);
  const std::size_t center = (w - 1) / 2;
  k[center * w + center] += 1.0;
  return k;
}

namespace {

std::size_t mirror(std::ptrdiff_t i, std::size_t n) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
  if (i < 0) i = -i - 1;
  if (i >= sn) i = 2 * sn - i - 1;
  return static_cast<std::size_t>(i);
}

}  // namespace

FilterResponses filter_responses(const Grid& input, const FilterBankSpec& spec) {
  spec.validate();
  const std::size_t rows = input.rows();
  const std::size_t cols = input.cols();
  require(rows > spec.max_window() && cols > spec.max_window(),
          "grid " + std::to_string(rows) + "x" + std::to_string(cols) +
              " is not larger than the largest filter window " +
              std::to_string(spec.max_window()));

  std::vector<double> g(input.size());
  double valid_sum = 0.0;
  std::size_t valid_n = 0;
  for (float v : input.values()) {
    if (input.is_nodata(v)) continue;
    valid_sum += v;
    ++valid_n;
  }
  const double fill = valid_n > 0 ? valid_sum / static_cast<double>(valid_n) : 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const float v = input.values()[i];
    g[i] = input.is_nodata(v) ? fill : static_cast<double>(v);
  }

  FilterResponses out;
  out.rows = rows;
  out.cols = cols;
  // Differences against the center tap keep the response exactly zero on
  // flat input and exactly unchanged under exactly-representable offsets.
  for (std::size_t j = 0; j < kKochFilters; ++j) {
    const std::size_t w = spec.windows[j];
    const auto lo = static_cast<std::ptrdiff_t>((w - 1) / 2);
    const auto hi = static_cast<std::ptrdiff_t>(w / 2);
    const double inv = 1.0 / static_cast<double>(w * w);
    auto& p = out.p[j];
    p.assign(rows * cols, 0.0);
    std::vector<std::size_t> col_index(static_cast<std::size_t>(lo + hi + 1));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double center = g[r * cols + c];
        for (std::ptrdiff_t k = -lo; k <= hi; ++k) {
          col_index[static_cast<std::size_t>(k + lo)] =
              mirror(static_cast<std::ptrdiff_t>(c) + k, cols);
        }
        double acc = 0.0;
        for (std::ptrdiff_t dr = -lo; dr <= hi; ++dr) {
          const double* row = &g[mirror(static_cast<std::ptrdiff_t>(r) + dr, rows) * cols];
          for (auto ci : col_index) acc += center - row[ci];
        }
        p[r * cols + c] = acc * inv;
      }
    }
  }
  return out;
}

std::array<Grid, kKochFilters> highpass_bank(const Grid& input, const FilterBankSpec& spec) {
  const auto resp = filter_responses(input, spec);
  std::array<Grid, kKochFilters> out;
  for (std::size_t j = 0; j < kKochFilters; ++j) {
    std::vector<float> v(resp.size());
    std::transform(resp.p[j].begin(), resp.p[j].end(), v.begin(),
                   [](double x) { return static_cast<float>(x); });
    out[j] = Grid(input.geometry(), std::move(v), DType::Float32, Grid::kDefaultNodata,
                  input.timestamp());
  }
  return out;
}

double sigmoid(double x, double steepness, double center) noexcept {
  return 1.0 / (1.0 + std::exp(-steepness * (x - center)));
}

// ---- parameters -------------------------------------------------------------

double& KochParams::operator[](std::size_t flat) {
  auto& m = flat < kKochParamCount / 2 ? gain : bias;
  flat %= kKochParamCount / 2;
  return m[flat / kKochFilters][flat % kKochFilters];
}

double KochParams::operator[](std::size_t flat) const {
  return const_cast<KochParams&>(*this)[flat];
}

KochParams KochParams::from_bounds(const std::array<double, kKochFilters>& lower,
                                   const std::array<double, kKochFilters>& upper,
                                   double resolution_m) {
  KochParams p;
  p.resolution_m = resolution_m;
  for (std::size_t j = 0; j < kKochFilters; ++j) {
    require(upper[j] > lower[j], "scaling bounds must satisfy lower < upper");
    const double k = 1.0 / (upper[j] - lower[j]);
    for (std::size_t i = 0; i < kKochClasses; ++i) {
      p.gain[i][j] = k;
      p.bias[i][j] = -lower[j] * k;
    }
  }
  return p;
}

KochParams KochParams::reference(double resolution_m) {
  // Response bounds in units of normalized backscatter; wider windows see
  // more of a cell's contrast, so their bounds sit higher. The narrow
  // ramps make this a near-hard detector of strong heterogeneity.
  return from_bounds({0.36, 0.38, 0.40, 0.42}, {0.41, 0.43, 0.45, 0.47}, resolution_m);
}

double& KochGradient::operator[](std::size_t flat) {
  auto& m = flat < kKochParamCount / 2 ? gain : bias;
  flat %= kKochParamCount / 2;
  return m[flat / kKochFilters][flat % kKochFilters];
}

double KochGradient::operator[](std::size_t flat) const {
  return const_cast<KochGradient&>(*this)[flat];
}

KochGradient& KochGradient::operator+=(const KochGradient& other) {
  for (std::size_t k = 0; k < kKochParamCount; ++k) (*this)[k] += other[k];
  return *this;
}

// ---- forward / backward -----------------------------------------------------

const Grid& Prediction::channel(std::size_t i) const {
  switch (i) {
    case 0: return y1;
    case 1: return y3;
    case 2: return y10;
  }
  throw PreconditionError("prediction channel index out of range");
}

Grid& Prediction::channel(std::size_t i) {
  return const_cast<Grid&>(std::as_const(*this).channel(i));
}

void koch_forward(const FilterResponses& resp, const KochParams& params,
                  Activation activation, std::span<double> out) {
  const std::size_t n = resp.size();
  require(out.size() == kKochClasses * n, "forward output buffer has wrong size");
  for (std::size_t i = 0; i < kKochClasses; ++i) {
    double* y = out.data() + i * n;
    for (std::size_t px = 0; px < n; ++px) {
      double sq = 0.0;
      for (std::size_t j = 0; j < kKochFilters; ++j) {
        const double z = params.gain[i][j] * resp.p[j][px] + params.bias[i][j];
        const double s = activation == Activation::Sigmoid
                             ? sigmoid(z, params.steepness, params.center)
                             : std::clamp(z, 0.0, 1.0);
        sq += s * s;
      }
      y[px] = std::sqrt(sq / static_cast<double>(kKochFilters));
    }
  }
}

namespace {

Prediction to_prediction(const Grid& like, std::span<const double> planes) {
  const std::size_t n = like.size();
  Prediction pred;
  for (std::size_t i = 0; i < kKochClasses; ++i) {
    std::vector<float> v(n);
    for (std::size_t px = 0; px < n; ++px) v[px] = static_cast<float>(planes[i * n + px]);
    pred.channel(i) = Grid(like.geometry(), std::move(v), DType::Float32,
                           Grid::kDefaultNodata, like.timestamp());
  }
  return pred;
}

Prediction forward_grid(const Grid& input, const KochParams& params,
                        const FilterBankSpec& spec, Activation act) {
  const auto resp = filter_responses(input, spec);
  std::vector<double> planes(kKochClasses * resp.size());
  koch_forward(resp, params, act, planes);
  return to_prediction(input, planes);
}

}  // namespace

Prediction koch_forward(const Grid& input, const KochParams& params,
                        const FilterBankSpec& spec) {
  return forward_grid(input, params, spec, Activation::Sigmoid);
}

Prediction koch_forward_clipped(const Grid& input, const KochParams& params,
                                const FilterBankSpec& spec) {
  return forward_grid(input, params, spec, Activation::Clip);
}

Grid koch_binary(const Grid& input, const FilterBankSpec& spec, const KochParams& reference,
                 double threshold) {
  require(threshold >= 0.0 && threshold <= 1.0, "binary threshold must lie in [0, 1]");
  const auto pred = koch_forward_clipped(input, reference, spec);
  Grid mask = Grid::mask(input.geometry());
  mask.set_timestamp(input.timestamp());
  for (std::size_t px = 0; px < mask.size(); ++px) {
    mask.values()[px] = static_cast<double>(pred.y1.values()[px]) >= threshold ? 1.0f : 0.0f;
  }
  return mask;
}

KochGradient koch_backward(const FilterResponses& resp, const KochParams& params,
                           std::span<const double> grad_y) {
  const std::size_t n = resp.size();
  require(grad_y.size() == kKochClasses * n, "gradient buffer does not match forward output");
  const double a = params.steepness;
  KochGradient grad;
  std::array<double, kKochFilters> s{};
  for (std::size_t i = 0; i < kKochClasses; ++i) {
    const double* gy = grad_y.data() + i * n;
    for (std::size_t px = 0; px < n; ++px) {
      if (gy[px] == 0.0) continue;
      double sq = 0.0;
      for (std::size_t j = 0; j < kKochFilters; ++j) {
        s[j] = sigmoid(params.gain[i][j] * resp.p[j][px] + params.bias[i][j], a,
                       params.center);
        sq += s[j] * s[j];
      }
      const double y = std::sqrt(sq / static_cast<double>(kKochFilters));
      if (!(y > 0.0)) continue;
      // dy/ds_j = s_j / (4 y); ds/dz = a s (1 - s)
      const double scale = gy[px] / (static_cast<double>(kKochFilters) * y);
      for (std::size_t j = 0; j < kKochFilters; ++j) {
        const double dz = scale * s[j] * a * s[j] * (1.0 - s[j]);
        grad.gain[i][j] += dz * resp.p[j][px];
        grad.bias[i][j] += dz;
      }
    }
  }
  return grad;
}

KochGradient koch_backward(const Grid& input, const KochParams& params,
                           const FilterBankSpec& spec, const Prediction& grad_y) {
  const auto resp = filter_responses(input, spec);
  const std::size_t n = resp.size();
  std::vector<double> planes(kKochClasses * n);
  for (std::size_t i = 0; i < kKochClasses; ++i) {
    const Grid& g = grad_y.channel(i);
    require(g.rows() == input.rows() && g.cols() == input.cols(),
            "gradient geometry does not match the forward output");
    for (std::size_t px = 0; px < n; ++px) planes[i * n + px] = g.values()[px];
  }
  return koch_backward(resp, params, planes);
}

// ---- serialization ----------------------------------------------------------

std::string to_json(const KochModel& model) {
  nlohmann::ordered_json j;
  j["a"] = model.params.steepness;
  j["c"] = model.params.center;
  j["K"] = model.params.gain;
  j["B"] = model.params.bias;
  j["scales"] = model.bank.windows;
  j["resolution_m"] = model.params.resolution_m;
  return j.dump(2);
}

KochModel koch_model_from_json(std::string_view text) {
  KochModel model;
  try {
    const auto j = nlohmann::json::parse(text);
    model.params.steepness = j.at("a").get<double>();
    model.params.center = j.at("c").get<double>();
    model.params.gain = j.at("K").get<KochMatrix>();
    model.params.bias = j.at("B").get<KochMatrix>();
    model.bank.windows = j.at("scales").get<std::array<std::size_t, kKochFilters>>();
    model.params.resolution_m = j.value("resolution_m", 400.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad Koch parameter JSON: ") + e.what());
  }
  require(model.params.steepness > 0.0, "sigmoid steepness must be positive");
  model.bank.validate();
  return model;
}

void save_koch_model(const KochModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write Koch parameters", path.string());
  out << to_json(model) << '\n';
}

KochModel load_koch_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open Koch parameters", path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return koch_model_from_json(buf.str());
  } catch (const Error& e) {
    throw FormatError(e.what(), path.string());
  }
}

}  // namespace sarrain
