#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "heatcast/calendar.hpp"
#include "heatcast/matrix.hpp"
#include "heatcast/station_data.hpp"

namespace heatcast::synth {

enum class EffectShape { Linear, Step, Flat };

// Contribution of one lagged predictor to the daily 2pm temperature, driven by
// the predictor's standardised value s on day d - lag_days: magnitude * s
// (linear), magnitude * [s > 0] (step) or nothing (flat).
struct Effect {
  station::Field predictor = station::Field::RelHumidity;
  EffectShape shape = EffectShape::Linear;
  double magnitude = 0.0;
  int lag_days = 14;
};

struct SynthConfig {
  Date start = Date{std::chrono::year{2018} / 1 / 1};
  int n_days = 365;
  std::uint64_t seed = 1;
  double base_temp = 22.0;           // annual mean of the 2pm temperature
  double seasonal_amplitude = 8.0;   // peak in mid July
  double ar1_phi = 0.42;             // residual dependence
  double noise_sd = 2.0;             // innovation sd of the residual process
  double diurnal_amplitude = 4.0;    // 2pm solar is the daily maximum
  double predictor_persistence = 0.9;  // AR(1) coefficient of the latent predictor walks
  double longitude = 0.0;
  std::vector<Effect> effects;
  std::vector<station::Field> all_missing;  // columns emitted entirely missing
  double missing_fraction = 0.0;            // independent per-cell dropout of other predictors

  void validate() const;  // throws InvalidArgument
};

// Hourly series plus the noise-free daily mean function (base + seasonal +
// effects) and the AR(1) residual added to it, both indexed by day.
struct SyntheticStation {
  std::vector<station::HourlyRecord> hours;
  std::vector<double> daily_mean;
  std::vector<double> daily_residual;
  double longitude = 0.0;
};

SyntheticStation generate_synthetic_station(const SynthConfig& config);

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double sse_reduction = 0.0;
};

// Exhaustive search over every feature and every midpoint between distinct
// values, scoring each partition by direct sums of squares. Uses the same
// tie rule as the tree grower. Requires <= 16 rows and <= 4 features.
SplitChoice brute_force_split_oracle(const Matrix& X, std::span<const double> targets, int min_node = 1);

struct OracleSplit {
  std::vector<std::size_t> rows;  // rows of the leaf that was split
  SplitChoice choice;
};

// Greedy best-first sequence obtained by running the split oracle on every
// current leaf and splitting the best one, `depth` times.
std::vector<OracleSplit> brute_force_tree_oracle(const Matrix& X, std::span<const double> targets, int depth,
                                                 int min_node = 1);

// Sample value with the smallest mean pinball loss (smallest value on ties).
// Throws EmptySample; requires <= 1000 values.
double brute_force_constant_oracle(std::span<const double> sample, double tau);

}  // namespace heatcast::synth
