#include "heatcast/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "heatcast/csv.hpp"
#include "heatcast/error.hpp"

namespace heatcast::conformal {

Ar1Fit fit_ar1(std::span<const double> e) {
  const std::size_t n = e.size();
  if (n < 20) throw Error(ErrorCode::TooShort, "AR(1) fit needs at least 20 residuals, got " + std::to_string(n));
  for (double v : e) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "residual series contains missing values");
  }
  const std::size_t m = n - 1;
  double mean_prev = 0.0, mean_next = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    mean_prev += e[t - 1];
    mean_next += e[t];
  }
  mean_prev /= static_cast<double>(m);
  mean_next /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    const double dx = e[t - 1] - mean_prev;
    sxy += dx * (e[t] - mean_next);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::Degenerate, "lagged residuals are constant");
  Ar1Fit fit;
  fit.n = n;
  fit.phi = sxy / sxx;
  fit.intercept = mean_next - fit.phi * mean_prev;
  fit.innovations.reserve(m);
  for (std::size_t t = 1; t < n; ++t) fit.innovations.push_back(e[t] - fit.intercept - fit.phi * e[t - 1]);
  return fit;
}

AcfResult acf(std::span<const double> series, int max_lag) {
  const std::size_t n = series.size();
  if (max_lag < 1 || 2 * static_cast<std::size_t>(max_lag) >= n) {
    throw Error(ErrorCode::TooShort, "max_lag must satisfy 1 <= max_lag < n/2");
  }
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0)) throw Error(ErrorCode::Degenerate, "autocorrelation of a constant series is undefined");
  AcfResult result;
  result.band = 1.96 / std::sqrt(static_cast<double>(n));
  result.white = true;
  for (int k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) {
      num += (series[t] - mean) * (series[t - static_cast<std::size_t>(k)] - mean);
    }
    const double rho = num / denom;
    result.rho.push_back(rho);
    if (std::abs(rho) >= result.band) result.white = false;
  }
  return result;
}

std::string_view method_name(Method m) { return m == Method::Cqr ? "cqr" : "symmetric"; }

std::optional<Method> method_from_name(std::string_view name) {
  if (name == "symmetric") return Method::Symmetric;
  if (name == "cqr") return Method::Cqr;
  return std::nullopt;
}

bool ConformalCalibration::bounded() const { return std::isfinite(q_hat); }

ConformalCalibration calibrate_scores(std::span<const double> scores, double alpha, Method method,
                                      bool allow_unbounded) {
  if (scores.empty()) throw Error(ErrorCode::EmptySample, "no calibration scores");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "calibration scores must be finite");
  }
  ConformalCalibration calib;
  calib.alpha = alpha;
  calib.method = method;
  calib.scores.assign(scores.begin(), scores.end());
  std::sort(calib.scores.begin(), calib.scores.end());
  const std::size_t n = calib.scores.size();
  calib.index = static_cast<std::size_t>(std::ceil(static_cast<double>(n + 1) * (1.0 - alpha) - 1e-9));
  calib.index = std::max<std::size_t>(calib.index, 1);
  if (calib.index > n) {
    if (!allow_unbounded) {
      throw Error(ErrorCode::AlphaTooSmall, "ceil((n+1)(1-alpha)) = " + std::to_string(calib.index) +
                                                " exceeds n = " + std::to_string(n) + "; region would be unbounded");
    }
    calib.q_hat = std::numeric_limits<double>::infinity();
  } else {
    calib.q_hat = calib.scores[calib.index - 1];
  }
  return calib;
}

PredictionRegion symmetric_region(double forecast, const ConformalCalibration& calib, Date date) {
  if (!calib.bounded()) throw Error(ErrorCode::UnboundedRegion, "calibration quantile is infinite");
  return PredictionRegion{date, forecast, forecast - calib.q_hat, forecast + calib.q_hat, calib.alpha,
                          Method::Symmetric, false};
}

SymmetricCalibration calibrate_symmetric(std::span<const double> observed, std::span<const double> forecast,
                                         double alpha) {
  if (observed.size() != forecast.size()) throw Error(ErrorCode::LengthMismatch, "observed vs forecast");
  std::vector<double> residuals(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) residuals[i] = observed[i] - forecast[i];
  SymmetricCalibration out;
  out.ar1 = fit_ar1(residuals);
  const int lags = std::min<int>(kWhitenessLags, static_cast<int>((out.ar1.innovations.size() - 1) / 2));
  out.raw_acf = acf(residuals, lags);
  out.innovation_acf = acf(out.ar1.innovations, lags);
  std::vector<double> scores(out.ar1.innovations.size());
  std::transform(out.ar1.innovations.begin(), out.ar1.innovations.end(), scores.begin(),
                 [](double v) { return std::abs(v); });
  out.calibration = calibrate_scores(scores, alpha, Method::Symmetric);
  return out;
}

namespace {

void check_cqr_levels(const qgbm::BoostedModel& lo, const qgbm::BoostedModel& hi, double alpha) {
  if (std::abs(lo.config.tau - alpha / 2.0) > 1e-9 || std::abs(hi.config.tau - (1.0 - alpha / 2.0)) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "cqr needs models at tau = alpha/2 and 1 - alpha/2");
  }
}

}  // namespace

ConformalCalibration calibrate_cqr(const qgbm::BoostedModel& lo_model, const qgbm::BoostedModel& hi_model,
                                   const Matrix& calib_X, std::span<const double> calib_y, double alpha) {
  check_cqr_levels(lo_model, hi_model, alpha);
  if (calib_X.rows() != calib_y.size()) throw Error(ErrorCode::LengthMismatch, "calibration X vs y");
  const auto lo = qgbm::predict(lo_model, calib_X);
  const auto hi = qgbm::predict(hi_model, calib_X);
  std::vector<double> scores(calib_y.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = std::max(lo[i] - calib_y[i], calib_y[i] - hi[i]);
  return calibrate_scores(scores, alpha, Method::Cqr);
}

PredictionRegion cqr_region(const qgbm::BoostedModel& lo_model, const qgbm::BoostedModel& hi_model,
                            const ConformalCalibration& calib, std::span<const double> x_new, Date date) {
  if (!calib.bounded()) throw Error(ErrorCode::UnboundedRegion, "calibration quantile is infinite");
  double lo = qgbm::predict_row(lo_model, x_new);
  double hi = qgbm::predict_row(hi_model, x_new);
  PredictionRegion region;
  region.date = date;
  region.alpha = calib.alpha;
  region.method = Method::Cqr;
  if (lo > hi) {
    std::swap(lo, hi);
    region.crossed = true;
  }
  region.forecast = 0.5 * (lo + hi);
  region.lower = lo - calib.q_hat;
  region.upper = hi + calib.q_hat;
  if (region.lower > region.upper) region.lower = region.upper = region.forecast;
  return region;
}

PredictionRegion cqr_region(const qgbm::BoostedModel& lo_model, const qgbm::BoostedModel& hi_model,
                            const Matrix& calib_X, std::span<const double> calib_y, double alpha,
                            std::span<const double> x_new, Date date) {
  return cqr_region(lo_model, hi_model, calibrate_cqr(lo_model, hi_model, calib_X, calib_y, alpha), x_new, date);
}

CoverageReport coverage_report(const std::vector<PredictionRegion>& regions, std::span<const double> observed,
                               std::size_t k) {
  if (regions.size() != observed.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(regions.size()) + " regions vs " +
                                               std::to_string(observed.size()) + " observations");
  }
  CoverageReport report;
  const std::size_t n = regions.size();
  report.n_regions = n;
  if (n == 0) return report;
  report.min_half_width = std::numeric_limits<double>::infinity();
  report.max_half_width = -std::numeric_limits<double>::infinity();
  double width_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    report.n_covered += regions[i].contains(observed[i]) ? 1 : 0;
    const double hw = regions[i].half_width();
    width_sum += hw;
    report.min_half_width = std::min(report.min_half_width, hw);
    report.max_half_width = std::max(report.max_half_width, hw);
  }
  report.empirical_coverage = static_cast<double>(report.n_covered) / static_cast<double>(n);
  report.mean_half_width = width_sum / static_cast<double>(n);

  report.k = std::min(k, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return observed[a] > observed[b]; });
  for (std::size_t i = 0; i < report.k; ++i) {
    report.top_k_covered += regions[order[i]].contains(observed[order[i]]) ? 1 : 0;
  }
  return report;
}

bool threshold_alert(const PredictionRegion& region, double threshold) { return region.upper >= threshold; }

void write_regions_csv(std::ostream& out, const std::vector<PredictionRegion>& regions,
                       std::optional<double> threshold) {
  csv::write_row(out, {"date", "forecast", "lower", "upper", "alpha", "method", "alert", "threshold"});
  for (const auto& r : regions) {
    csv::write_row(out, {format_date(r.date), csv::format_double(r.forecast), csv::format_double(r.lower),
                         csv::format_double(r.upper), csv::format_double(r.alpha), std::string(method_name(r.method)),
                         threshold ? (threshold_alert(r, *threshold) ? "1" : "0") : "NA",
                         threshold ? csv::format_double(*threshold) : "NA"});
  }
}

}  // namespace heatcast::conformal
