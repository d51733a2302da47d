#include "sarrain/gmf.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sarrain/error.hpp"

namespace sarrain {

namespace {

constexpr std::array<double, 28> kCmod5nCoefficients = {
    -0.6878, -0.7957, 0.3380,  -0.1728, 0.0000, 0.0040,  0.1103,
    0.0159,  6.7329,  2.7713,  -2.2885, 0.4971, -0.7250, 0.0450,
    0.0066,  0.3222,  0.0120,  22.7000, 2.0813, 3.0000,  8.3659,
    -3.3428, 1.3236,  6.2437,  2.3893,  0.3249, 4.1590,  1.6930};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Hersbach (2010) CMOD5.N. c is 1-indexed in the published form; c[k-1] here.
double cmod5n_eval(const std::vector<double>& coef, double incidence_deg,
                   double wind, double direction_deg) {
  auto c = [&coef](int k) { return coef[static_cast<std::size_t>(k - 1)]; };
  constexpr double kThetaMid = 40.0;
  constexpr double kThetaHalf = 25.0;
  constexpr double kZPow = 1.6;
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

  const double y0 = c(19);
  const double pn = c(20);
  const double a = c(19) - (c(19) - 1.0) / c(20);
  const double b = 1.0 / (c(20) * std::pow(c(19) - 1.0, pn - 1.0));

  const double cos_phi = std::cos(direction_deg * kDegToRad);
  const double cos_2phi = 2.0 * cos_phi * cos_phi - 1.0;

  const double x = (incidence_deg - kThetaMid) / kThetaHalf;
  const double xx = x * x;

  const double a0 = c(1) + c(2) * x + c(3) * xx + c(4) * x * xx;
  const double a1 = c(5) + c(6) * x;
  const double a2 = c(7) + c(8) * x;
  const double gam = c(9) + c(10) * x + c(11) * xx;
  const double s0 = c(12) + c(13) * x;

  const double s = a2 * wind;
  double a3 = 1.0 / (1.0 + std::exp(-std::max(s, s0)));
  if (s < s0) a3 *= std::pow(s / s0, s0 * (1.0 - a3));
  const double b0 = std::pow(a3, gam) * std::pow(10.0, a0 + a1 * wind);

  double b1 = c(15) * wind * (0.5 + x - std::tanh(4.0 * (x + c(16) + c(17) * wind)));
  b1 = c(14) * (1.0 + x) - b1;
  b1 /= std::exp(0.34 * (wind - c(18))) + 1.0;

  const double v0 = c(21) + c(22) * x + c(23) * xx;
  const double d1 = c(24) + c(25) * x + c(26) * xx;
  const double d2 = c(27) + c(28) * x;
  double v2 = wind / v0 + 1.0;
  if (v2 < y0) v2 = a + b * std::pow(v2 - 1.0, pn);
  const double b2 = (-d1 + d2 * v2) * std::exp(-v2);

  return b0 * std::pow(1.0 + b1 * cos_phi + b2 * cos_2phi, kZPow);
}

}  // namespace

std::size_t gmf_arity(std::string_view name) {
  if (name == "cmod5n") return kCmod5nCoefficients.size();
  if (name == "constant") return 1;
  throw PreconditionError("unknown GMF '" + std::string(name) + "'");
}

void GmfSpec::validate() const {
  const auto arity = gmf_arity(name);
  require(coefficients.size() == arity,
          "GMF '" + name + "' needs " + std::to_string(arity) +
              " coefficients, got " + std::to_string(coefficients.size()));
  for (double c : coefficients) require(std::isfinite(c), "non-finite GMF coefficient");
  if (name == "constant") require(coefficients[0] > 0.0, "constant GMF must be positive");
}

GmfSpec parse_gmf(std::string_view text) {
  GmfSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      auto body = trim(view.substr(1));
      if (body.starts_with("name:")) spec.name = std::string(trim(body.substr(5)));
      continue;
    }
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = trim(view.substr(0, hash));
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(view), &used);
      if (used != view.size()) throw std::invalid_argument("trailing text");
      spec.coefficients.push_back(v);
    } catch (const std::exception&) {
      throw FormatError("bad GMF coefficient line '" + std::string(view) + "'");
    }
  }
  spec.validate();
  return spec;
}

GmfSpec load_gmf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open GMF coefficient file", path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_gmf(buf.str());
  } catch (const Error& e) {
    throw FormatError(e.what(), path.string());
  }
}

GmfSpec cmod5n() {
  GmfSpec spec;
  spec.coefficients.assign(kCmod5nCoefficients.begin(), kCmod5nCoefficients.end());
  return spec;
}

double gmf_eval(const GmfSpec& spec, double incidence_deg, double wind_mps,
                double direction_deg) {
  if (!(incidence_deg >= kGmfMinIncidenceDeg && incidence_deg <= kGmfMaxIncidenceDeg)) {
    throw RangeError("incidence " + std::to_string(incidence_deg) +
                     " deg outside GMF validity [16, 66]");
  }
  if (!(wind_mps >= 0.0) || !std::isfinite(wind_mps)) {
    throw RangeError("wind speed must be finite and non-negative");
  }
  if (spec.name == "constant") return spec.coefficients.at(0);
  require(spec.coefficients.size() == kCmod5nCoefficients.size(),
          "cmod5n needs 28 coefficients");
  return cmod5n_eval(spec.coefficients, incidence_deg, wind_mps, direction_deg);
}

Grid incidence_normalize(const Sigma0Grid& swath, const GmfSpec& spec) {
  const Grid& s0 = swath.sigma0;
  require(swath.incidence_deg.size() == s0.cols(),
          "incidence must be defined for every column");
  std::vector<double> reference(s0.cols());
  for (std::size_t c = 0; c < s0.cols(); ++c) {
    try {
      reference[c] = gmf_eval(spec, swath.incidence_deg[c], spec.reference_wind_mps,
                              spec.reference_direction_deg);
    } catch (const RangeError& e) {
      throw RangeError(std::string(e.what()) + " at column " + std::to_string(c));
    }
    if (!(reference[c] > 0.0)) {
      throw RangeError("GMF reference backscatter is not positive at column " +
                       std::to_string(c));
    }
  }
  Grid out(s0.geometry(), DType::Float32, 0.0f, s0.nodata(), s0.timestamp());
  for (std::size_t r = 0; r < s0.rows(); ++r) {
    for (std::size_t c = 0; c < s0.cols(); ++c) {
      const float v = s0(r, c);
      out(r, c) = s0.is_nodata(v) ? s0.nodata()
                                  : static_cast<float>(static_cast<double>(v) / reference[c]);
    }
  }
  return out;
}

Grid wind_residual(const Grid& sigma0_norm, const std::vector<double>& incidence_deg,
                   const Grid& wind_mps, const GmfSpec& spec) {
  require(incidence_deg.size() == sigma0_norm.cols(), "incidence must be defined for every column");
  require(wind_mps.rows() == sigma0_norm.rows() && wind_mps.cols() == sigma0_norm.cols(),
          "wind must match the backscatter geometry");
  Grid out(sigma0_norm.geometry(), DType::Float32, 0.0f, sigma0_norm.nodata(), sigma0_norm.timestamp());
  const auto nd = static_cast<float>(out.nodata());
  for (std::size_t c = 0; c < sigma0_norm.cols(); ++c) {
    const double inc = incidence_deg[c];
    const double ref = gmf_eval(spec, inc, spec.reference_wind_mps, spec.reference_direction_deg);
    for (std::size_t r = 0; r < sigma0_norm.rows(); ++r) {
      const float s = sigma0_norm(r, c), w = wind_mps(r, c);
      if (sigma0_norm.is_nodata(s) || wind_mps.is_nodata(w)) {
        out(r, c) = nd;
        continue;
      }
      const double local = gmf_eval(spec, inc, w, spec.reference_direction_deg);
      out(r, c) = local > 0.0 ? static_cast<float>(s * ref / local) : nd;
    }
  }
  return out;
}

}  // namespace sarrain
