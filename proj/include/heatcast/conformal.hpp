#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "heatcast/calendar.hpp"
#include "heatcast/matrix.hpp"
#include "heatcast/qgbm.hpp"

namespace heatcast::conformal {

struct Ar1Fit {
  double phi = 0.0;
  double intercept = 0.0;
  std::vector<double> innovations;  // n - 1 values
  std::size_t n = 0;

  [[nodiscard]] bool stationary() const { return std::abs(phi) < 1.0; }
};

// Least squares of e_t on e_{t-1} with intercept. Throws TooShort (n < 20),
// InvalidArgument on non-finite input and Degenerate when e_{t-1} is constant.
Ar1Fit fit_ar1(std::span<const double> residuals);

struct AcfResult {
  std::vector<double> rho;  // lags 1..max_lag
  double band = 0.0;        // 1.96 / sqrt(n)
  bool white = false;       // every |rho| < band
};

// Throws TooShort unless max_lag < n/2, Degenerate for a constant series.
AcfResult acf(std::span<const double> series, int max_lag);

enum class Method { Symmetric, Cqr };

std::string_view method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

struct ConformalCalibration {
  std::vector<double> scores;  // ascending
  double alpha = 0.1;
  double q_hat = 0.0;          // +inf when the corrected index exceeds n
  std::size_t index = 0;       // ceil((n + 1)(1 - alpha)), 1-based
  Method method = Method::Symmetric;

  [[nodiscard]] bool bounded() const;
};

// Throws AlphaTooSmall when ceil((n+1)(1-alpha)) > n, unless allow_unbounded
// is set, in which case q_hat is +inf.
ConformalCalibration calibrate_scores(std::span<const double> scores, double alpha, Method method,
                                      bool allow_unbounded = false);

struct PredictionRegion {
  Date date{};
  double forecast = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.0;
  Method method = Method::Symmetric;
  bool crossed = false;  // cqr only: lower/upper quantile forecasts were swapped

  [[nodiscard]] double half_width() const { return 0.5 * (upper - lower); }
  [[nodiscard]] bool contains(double y) const { return lower <= y && y <= upper; }
};

// [forecast - q_hat, forecast + q_hat]. Throws UnboundedRegion.
PredictionRegion symmetric_region(double forecast, const ConformalCalibration& calib, Date date);

// Symmetric calibration from a calibration year: residuals observed - forecast
// are whitened by an AR(1) fit and the absolute innovations become the scores.
struct SymmetricCalibration {
  Ar1Fit ar1;
  AcfResult raw_acf;
  AcfResult innovation_acf;
  ConformalCalibration calibration;
};

inline constexpr int kWhitenessLags = 10;

SymmetricCalibration calibrate_symmetric(std::span<const double> observed, std::span<const double> forecast,
                                         double alpha);

// Conformalised quantile regression scores E_i = max(q_lo(x_i) - y_i, y_i - q_hi(x_i))
// on rows disjoint from training. Requires lo tau = alpha/2, hi tau = 1 - alpha/2.
ConformalCalibration calibrate_cqr(const qgbm::BoostedModel& lo_model, const qgbm::BoostedModel& hi_model,
                                   const Matrix& calib_X, std::span<const double> calib_y, double alpha);

// [q_lo(x) - q_hat, q_hi(x) + q_hat]. Crossed quantile forecasts are swapped
// and flagged; a negative q_hat that would invert the region collapses it to
// its midpoint. `forecast` records the midpoint of the quantile pair.
PredictionRegion cqr_region(const qgbm::BoostedModel& lo_model, const qgbm::BoostedModel& hi_model,
                            const ConformalCalibration& calib, std::span<const double> x_new, Date date);

PredictionRegion cqr_region(const qgbm::BoostedModel& lo_model, const qgbm::BoostedModel& hi_model,
                            const Matrix& calib_X, std::span<const double> calib_y, double alpha,
                            std::span<const double> x_new, Date date);

struct CoverageReport {
  std::size_t n_regions = 0;
  std::size_t n_covered = 0;
  double empirical_coverage = 0.0;
  std::size_t k = 0;
  std::size_t top_k_covered = 0;  // among the k largest observed values
  double mean_half_width = 0.0;
  double min_half_width = 0.0;
  double max_half_width = 0.0;
};

// Throws LengthMismatch.
CoverageReport coverage_report(const std::vector<PredictionRegion>& regions, std::span<const double> observed,
                               std::size_t k);

// True when the region reaches the threshold: it contains it or lies wholly
// above it.
bool threshold_alert(const PredictionRegion& region, double threshold);

// date, forecast, lower, upper, alpha, method, alert, threshold
void write_regions_csv(std::ostream& out, const std::vector<PredictionRegion>& regions,
                       std::optional<double> threshold);

}  // namespace heatcast::conformal
