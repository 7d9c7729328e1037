#pragma once

namespace heatcast::heat_index {

// Magnus coefficients for saturation vapour pressure over water.
inline constexpr double kMagnusA = 17.625;
inline constexpr double kMagnusB = 243.04;

// Dew points may exceed air temperature by this much (sensor noise).
inline constexpr double kDewPointSlack = 0.5;

double celsius_to_fahrenheit(double c);
double fahrenheit_to_celsius(double f);

// Percent relative humidity from temperature and dew point (deg C), clamped
// to [0, 100]. Throws DomainError for t or td <= -243.04, non-finite input,
// or td > t + 0.5.
double relative_humidity_from_dew_point(double t, double td);

// Inverse Magnus: dew point (deg C) for temperature t and rh in (0, 100].
double dew_point_from_relative_humidity(double t, double rh);

// Steadman apparent temperature in the NWS operational form: the simple
// estimate below 80 F, otherwise the Rothfusz regression with the low- and
// high-humidity adjustments. Input and output in deg C; rh in percent.
double steadman_heat_index(double t, double rh);

// Same index driven by dew point instead of relative humidity.
double heat_index_dew_point_variant(double t, double td);

}  // namespace heatcast::heat_index
