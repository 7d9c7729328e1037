#include "heatcast/heat_index.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "heatcast/error.hpp"

namespace heatcast::heat_index {

double celsius_to_fahrenheit(double c) { return c * 9.0 / 5.0 + 32.0; }

double fahrenheit_to_celsius(double f) { return (f - 32.0) * 5.0 / 9.0; }

double relative_humidity_from_dew_point(double t, double td) {
  if (!std::isfinite(t) || !std::isfinite(td)) {
    throw Error(ErrorCode::DomainError, "non-finite temperature or dew point");
  }
  if (t <= -kMagnusB || td <= -kMagnusB) {
    throw Error(ErrorCode::DomainError, "temperature below Magnus pole");
  }
  if (td > t + kDewPointSlack) {
    throw Error(ErrorCode::DomainError,
                "dew point " + std::to_string(td) + " exceeds air temperature " + std::to_string(t));
  }
  const double rh = 100.0 * std::exp(kMagnusA * td / (kMagnusB + td) - kMagnusA * t / (kMagnusB + t));
  return std::clamp(rh, 0.0, 100.0);
}

double dew_point_from_relative_humidity(double t, double rh) {
  if (!(rh > 0.0 && rh <= 100.0) || !std::isfinite(t) || t <= -kMagnusB) {
    throw Error(ErrorCode::DomainError, "relative humidity must lie in (0, 100]");
  }
  const double gamma = std::log(rh / 100.0) + kMagnusA * t / (kMagnusB + t);
  return kMagnusB * gamma / (kMagnusA - gamma);
}

double steadman_heat_index(double t, double rh) {
  if (!(rh >= 0.0 && rh <= 100.0)) {
    throw Error(ErrorCode::DomainError, "relative humidity " + std::to_string(rh) + " outside [0, 100]");
  }
  if (!std::isfinite(t)) throw Error(ErrorCode::DomainError, "non-finite temperature");

  const double tf = celsius_to_fahrenheit(t);
  const double simple = 0.5 * (tf + 61.0 + (tf - 68.0) * 1.2 + rh * 0.094);
  if (0.5 * (simple + tf) < 80.0) return fahrenheit_to_celsius(simple);

  double hi = -42.379 + 2.04901523 * tf + 10.14333127 * rh - 0.22475541 * tf * rh -
              6.83783e-3 * tf * tf - 5.481717e-2 * rh * rh + 1.22874e-3 * tf * tf * rh +
              8.5282e-4 * tf * rh * rh - 1.99e-6 * tf * tf * rh * rh;
  if (rh < 13.0 && tf >= 80.0 && tf <= 112.0) {
    hi -= ((13.0 - rh) / 4.0) * std::sqrt((17.0 - std::fabs(tf - 95.0)) / 17.0);
  } else if (rh > 85.0 && tf >= 80.0 && tf <= 87.0) {
    hi += ((rh - 85.0) / 10.0) * ((87.0 - tf) / 5.0);
  }
  return fahrenheit_to_celsius(hi);
}

double heat_index_dew_point_variant(double t, double td) {
  return steadman_heat_index(t, relative_humidity_from_dew_point(t, td));
}

}  // namespace heatcast::heat_index
