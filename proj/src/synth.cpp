#include "heatcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "heatcast/error.hpp"
#include "heatcast/heat_index.hpp"
#include "heatcast/qgbm.hpp"
#include "heatcast/random.hpp"

namespace heatcast::synth {

using station::Field;

void SynthConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (n_days < 1) fail("n_days must be positive");
  if (!(std::abs(ar1_phi) < 1.0)) fail("|ar1_phi| must be below 1");
  if (!(noise_sd > 0.0)) fail("noise_sd must be positive");
  if (!(std::abs(predictor_persistence) < 1.0)) fail("|predictor_persistence| must be below 1");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) fail("missing_fraction must lie in [0, 1)");
  for (const auto& e : effects) {
    if (e.lag_days < 1) fail("effect lag_days must be at least 1");
  }
}

namespace {

constexpr std::size_t idx(Field f) { return static_cast<std::size_t>(f); }

double seasonal(const SynthConfig& c, int day) {
  const std::chrono::year_month_day ymd{c.start + std::chrono::days{day}};
  const Date jan1{ymd.year() / 1 / 1};
  const double doy = static_cast<double>((c.start + std::chrono::days{day} - jan1).count());
  return c.seasonal_amplitude * std::sin(2.0 * std::numbers::pi * (doy - 105.0) / 365.25);
}

}  // namespace

SyntheticStation generate_synthetic_station(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const auto n = static_cast<std::size_t>(config.n_days);
  const double phi_z = config.predictor_persistence;
  const double z_sd = std::sqrt(1.0 - phi_z * phi_z);

  // Latent standardised walks for the five exogenous predictors.
  const std::array<Field, 5> exogenous{Field::WindDir, Field::WindSpeed, Field::SeaLevelPressure, Field::Visibility,
                                       Field::RelHumidity};
  std::array<std::vector<double>, station::kFieldCount> z;
  for (Field f : exogenous) {
    auto& series = z[idx(f)];
    series.resize(n);
    double state = rng.normal();
    for (std::size_t d = 0; d < n; ++d) {
      if (d > 0) state = phi_z * state + z_sd * rng.normal();
      series[d] = state;
    }
  }

  std::vector<station::WeatherValues> daily(n);
  for (std::size_t d = 0; d < n; ++d) {
    auto& v = daily[d];
    v[Field::WindDir] = std::fmod(std::fmod(180.0 + 90.0 * z[idx(Field::WindDir)][d], 360.0) + 360.0, 360.0);
    v[Field::WindSpeed] = std::max(0.0, 4.0 + 2.0 * z[idx(Field::WindSpeed)][d]);
    v[Field::SeaLevelPressure] = 1015.0 + 8.0 * z[idx(Field::SeaLevelPressure)][d];
    v[Field::Visibility] = std::clamp(20000.0 + 8000.0 * z[idx(Field::Visibility)][d], 500.0, 50000.0);
    v[Field::RelHumidity] = std::clamp(60.0 + 15.0 * z[idx(Field::RelHumidity)][d], 5.0, 100.0);
  }

  SyntheticStation out;
  out.longitude = config.longitude;
  out.daily_mean.resize(n);
  out.daily_residual.resize(n);
  std::vector<double> anomaly(n, 0.0);  // temperature minus base and seasonal cycle
  double u = config.noise_sd / std::sqrt(1.0 - config.ar1_phi * config.ar1_phi) * rng.normal();
  for (std::size_t d = 0; d < n; ++d) {
    const int day = static_cast<int>(d);
    double mean = config.base_temp + seasonal(config, day);
    for (const auto& e : config.effects) {
      const std::size_t src = d >= static_cast<std::size_t>(e.lag_days) ? d - static_cast<std::size_t>(e.lag_days) : 0;
      double s = 0.0;
      switch (e.predictor) {
        case Field::AirTemp: s = anomaly[src] / config.noise_sd; break;
        case Field::DewPoint: s = (daily[src][Field::DewPoint] - 10.0) / 5.0; break;
        default: s = z[idx(e.predictor)][src]; break;
      }
      if (e.shape == EffectShape::Linear) mean += e.magnitude * s;
      if (e.shape == EffectShape::Step) mean += s > 0.0 ? e.magnitude : 0.0;
    }
    if (d > 0) u = config.ar1_phi * u + config.noise_sd * rng.normal();
    out.daily_mean[d] = mean;
    out.daily_residual[d] = u;
    const double t = mean + u;
    anomaly[d] = t - config.base_temp - seasonal(config, day);
    daily[d][Field::AirTemp] = t;
    daily[d][Field::DewPoint] = heat_index::dew_point_from_relative_humidity(t, daily[d][Field::RelHumidity]);
  }

  const double solar_shift_hours = config.longitude / 15.0;
  out.hours.reserve(n * 24);
  for (std::size_t d = 0; d < n; ++d) {
    const Timestamp midnight{config.start + std::chrono::days{static_cast<int>(d)}};
    for (int h = 0; h < 24; ++h) {
      station::HourlyRecord rec{midnight + std::chrono::hours{h}, daily[d]};
      const double solar_hour = h + solar_shift_hours;
      const double t = daily[d][Field::AirTemp] +
                       config.diurnal_amplitude * (std::cos(2.0 * std::numbers::pi * (solar_hour - 14.0) / 24.0) - 1.0);
      rec.values[Field::AirTemp] = t;
      rec.values[Field::DewPoint] = heat_index::dew_point_from_relative_humidity(t, daily[d][Field::RelHumidity]);
      out.hours.push_back(rec);
    }
  }

  for (auto& rec : out.hours) {
    for (Field f : config.all_missing) rec.values[f] = station::kMissing;
  }
  if (config.missing_fraction > 0.0) {
    for (auto& rec : out.hours) {
      for (Field f : station::kAllFields) {
        if (f == Field::AirTemp) continue;
        if (rng.uniform() < config.missing_fraction) rec.values[f] = station::kMissing;
      }
    }
  }
  return out;
}

namespace {

double sse(std::span<const double> t, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double mean = 0.0;
  for (std::size_t r : rows) mean += t[r];
  mean /= static_cast<double>(rows.size());
  double s = 0.0;
  for (std::size_t r : rows) s += (t[r] - mean) * (t[r] - mean);
  return s;
}

SplitChoice oracle_on_rows(const Matrix& X, std::span<const double> targets, const std::vector<std::size_t>& rows,
                           int min_node) {
  SplitChoice best;
  const double parent = sse(targets, rows);
  if (!(parent > 0.0)) return best;
  const double tol = 1e-9 * parent;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    std::vector<double> values;
    for (std::size_t r : rows) values.push_back(X(r, j));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double threshold = 0.5 * (values[k] + values[k + 1]);
      std::vector<std::size_t> left, right;
      for (std::size_t r : rows) (X(r, j) < threshold ? left : right).push_back(r);
      if (left.size() < static_cast<std::size_t>(min_node) || right.size() < static_cast<std::size_t>(min_node)) {
        continue;
      }
      const double reduction = parent - sse(targets, left) - sse(targets, right);
      const bool better = best.found ? reduction > best.sse_reduction + tol : reduction > tol;
      if (better) best = SplitChoice{true, static_cast<int>(j), threshold, reduction};
    }
  }
  return best;
}

}  // namespace

SplitChoice brute_force_split_oracle(const Matrix& X, std::span<const double> targets, int min_node) {
  if (X.rows() > 16 || X.cols() > 4) throw Error(ErrorCode::InvalidArgument, "oracle limited to 16 rows, 4 features");
  if (targets.size() != X.rows()) throw Error(ErrorCode::LengthMismatch, "targets vs rows");
  std::vector<std::size_t> rows(X.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return oracle_on_rows(X, targets, rows, min_node);
}

std::vector<OracleSplit> brute_force_tree_oracle(const Matrix& X, std::span<const double> targets, int depth,
                                                 int min_node) {
  if (X.rows() > 16 || X.cols() > 4) throw Error(ErrorCode::InvalidArgument, "oracle limited to 16 rows, 4 features");
  std::vector<std::vector<std::size_t>> leaves(1);
  for (std::size_t i = 0; i < X.rows(); ++i) leaves[0].push_back(i);
  std::vector<OracleSplit> sequence;
  for (int s = 0; s < depth; ++s) {
    std::size_t pick = leaves.size();
    SplitChoice best;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      const SplitChoice c = oracle_on_rows(X, targets, leaves[l], min_node);
      if (c.found && (!best.found || c.sse_reduction > best.sse_reduction)) {
        best = c;
        pick = l;
      }
    }
    if (pick == leaves.size()) break;
    std::vector<std::size_t> left, right;
    for (std::size_t r : leaves[pick]) {
      (X(r, static_cast<std::size_t>(best.feature)) < best.threshold ? left : right).push_back(r);
    }
    sequence.push_back(OracleSplit{leaves[pick], best});
    // Children take the parent's place in creation order: appended at the end.
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
    leaves.push_back(std::move(left));
    leaves.push_back(std::move(right));
  }
  return sequence;
}

double brute_force_constant_oracle(std::span<const double> sample, double tau) {
  if (sample.empty()) throw Error(ErrorCode::EmptySample, "constant oracle of an empty sample");
  if (sample.size() > 1000) throw Error(ErrorCode::InvalidArgument, "constant oracle limited to 1000 values");
  std::vector<double> candidates(sample.begin(), sample.end());
  std::sort(candidates.begin(), candidates.end());
  double best_value = candidates.front();
  double best_loss = std::numeric_limits<double>::infinity();
  for (double c : candidates) {
    double loss = 0.0;
    for (double y : sample) loss += qgbm::quantile_loss(y, c, tau);
    if (loss < best_loss) {
      best_loss = loss;
      best_value = c;
    }
  }
  return best_value;
}

}  // namespace heatcast::synth
