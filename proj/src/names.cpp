#include "gmrs/explore.hpp"
#include "gmrs/rbf.hpp"

namespace gmrs {

const char* to_string(RadialFamily f) noexcept {
  switch (f) {
    case RadialFamily::gaussian: return "gaussian";
    case RadialFamily::inverse_quadratic: return "inverse-quadratic";
    case RadialFamily::multiquadric: return "multiquadric";
    case RadialFamily::linear: return "linear";
    case RadialFamily::thin_plate: return "thin-plate";
  }
  return "unknown";
}

RadialFamily parse_radial_family(const std::string& s) {
  if (s == "gaussian") return RadialFamily::gaussian;
  if (s == "inverse-quadratic") return RadialFamily::inverse_quadratic;
  if (s == "multiquadric") return RadialFamily::multiquadric;
  if (s == "linear") return RadialFamily::linear;
  if (s == "thin-plate") return RadialFamily::thin_plate;
  throw Error(ErrorCode::invalid_argument, "unknown radial family '" + s + "'");
}

const char* to_string(ExploreVariant v) noexcept {
  switch (v) {
    case ExploreVariant::idw: return "idw";
    case ExploreVariant::msrs: return "msrs";
    case ExploreVariant::gp_std: return "gpstd";
  }
  return "unknown";
}

ExploreVariant parse_explore_variant(const std::string& s) {
  if (s == "idw") return ExploreVariant::idw;
  if (s == "msrs" || s == "msrs-mindist") return ExploreVariant::msrs;
  if (s == "gpstd" || s == "neg-gp-std") return ExploreVariant::gp_std;
  throw Error(ErrorCode::invalid_argument, "unknown exploration variant '" + s + "'");
}

}  // namespace gmrs
