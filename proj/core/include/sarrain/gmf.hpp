#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sarrain/raster.hpp"

namespace sarrain {

/// A geophysical model function: a named functional form plus its
/// coefficient table. "cmod5n" takes 28 coefficients; "constant" takes one
/// and returns it everywhere (test stub).
struct GmfSpec {
  std::string name = "cmod5n";
  std::vector<double> coefficients;
  double reference_wind_mps = 10.0;
  double reference_direction_deg = 45.0;

  void validate() const;
};

std::size_t gmf_arity(std::string_view name);

/// Coefficient text: one real per line, '#' starts a comment, and a
/// "# name: <gmf>" comment selects the functional form (default cmod5n).
GmfSpec parse_gmf(std::string_view text);
GmfSpec load_gmf(const std::filesystem::path& path);

/// The CMOD5.N table shipped in data/cmod5n.txt, compiled in.
GmfSpec cmod5n();

inline constexpr double kGmfMinIncidenceDeg = 16.0;
inline constexpr double kGmfMaxIncidenceDeg = 66.0;

/// Linear backscatter predicted for VV at the given geometry and wind.
/// Direction is the wind-to-antenna-azimuth angle in degrees.
double gmf_eval(const GmfSpec& spec, double incidence_deg, double wind_mps,
                double direction_deg);

struct Sigma0Grid {
  Grid sigma0;                        // linear power, >= 0
  std::vector<double> incidence_deg;  // one angle per column
};

/// sigma0 / gmf(incidence(col), reference wind, reference direction).
/// Nodata propagates; no further per-swath renormalization.
Grid incidence_normalize(const Sigma0Grid& swath, const GmfSpec& spec);

/// Normalized backscatter divided by what the GMF predicts at the local wind,
/// i.e. the excess left after removing the wind and incidence background.
/// Nodata where either input is nodata or the prediction is not positive.
Grid wind_residual(const Grid& sigma0_norm, const std::vector<double>& incidence_deg,
                   const Grid& wind_mps, const GmfSpec& spec);

}  // namespace sarrain
