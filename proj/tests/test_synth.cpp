#include <cmath>

#include "doctest.h"
#include "heatcast/conformal.hpp"
#include "heatcast/error.hpp"
#include "heatcast/synth.hpp"

using namespace heatcast;
using namespace heatcast::synth;
using station::Field;

TEST_SUITE("synth") {
  TEST_CASE("generator is deterministic per seed") {
    SynthConfig cfg;
    cfg.n_days = 30;
    cfg.seed = 5;
    const auto a = generate_synthetic_station(cfg);
    const auto b = generate_synthetic_station(cfg);
    REQUIRE(a.hours.size() == 30 * 24);
    for (std::size_t i = 0; i < a.hours.size(); ++i) {
      CHECK(a.hours[i].timestamp_utc == b.hours[i].timestamp_utc);
      for (Field f : station::kAllFields) {
        const double x = a.hours[i].values[f], y = b.hours[i].values[f];
        CHECK(((std::isnan(x) && std::isnan(y)) || x == y));
      }
    }
    cfg.seed = 6;
    const auto c = generate_synthetic_station(cfg);
    CHECK(c.hours[100].values[Field::AirTemp] != a.hours[100].values[Field::AirTemp]);
  }

  TEST_CASE("degenerate configuration gives a constant 2pm temperature") {
    SynthConfig cfg;
    cfg.n_days = 60;
    cfg.seasonal_amplitude = 0.0;
    cfg.noise_sd = 1e-12;
    cfg.effects = {Effect{Field::RelHumidity, EffectShape::Flat, 5.0, 14}};
    const auto st = generate_synthetic_station(cfg);
    for (std::size_t d = 0; d < st.daily_mean.size(); ++d) {
      CHECK(std::abs(st.daily_mean[d] + st.daily_residual[d] - cfg.base_temp) < 1e-9);
    }
    const auto snap = station::extract_daily_snapshot(st.hours, st.longitude, 14.0, 90);
    for (const auto& day : snap.days) CHECK(std::abs(day.values[Field::AirTemp] - cfg.base_temp) < 1e-9);
  }

  TEST_CASE("residual process has the configured lag-1 autocorrelation") {
    SynthConfig cfg;
    cfg.n_days = 5000;
    cfg.ar1_phi = 0.42;
    const auto st = generate_synthetic_station(cfg);
    const auto r = conformal::acf(st.daily_residual, 5);
    CHECK(std::abs(r.rho[0] - 0.42) < 0.05);
  }

  TEST_CASE("physical ranges and missing-data controls") {
    SynthConfig cfg;
    cfg.n_days = 200;
    cfg.longitude = -75.0;
    cfg.all_missing = {Field::SeaLevelPressure};
    cfg.missing_fraction = 0.1;
    const auto st = generate_synthetic_station(cfg);
    std::size_t missing = 0, cells = 0;
    for (const auto& h : st.hours) {
      CHECK(std::isnan(h.values[Field::SeaLevelPressure]));
      const double wd = h.values[Field::WindDir], rh = h.values[Field::RelHumidity], ws = h.values[Field::WindSpeed];
      if (!std::isnan(wd)) CHECK((wd >= 0.0 && wd < 360.0));
      if (!std::isnan(rh)) CHECK((rh >= 0.0 && rh <= 100.0));
      if (!std::isnan(ws)) CHECK(ws >= 0.0);
      for (Field f : {Field::WindDir, Field::WindSpeed, Field::Visibility, Field::DewPoint, Field::RelHumidity}) {
        missing += std::isnan(h.values[f]) ? 1 : 0;
        ++cells;
      }
    }
    const double frac = static_cast<double>(missing) / static_cast<double>(cells);
    CHECK(frac > 0.08);
    CHECK(frac < 0.12);
  }

  TEST_CASE("configuration validation") {
    SynthConfig cfg;
    cfg.ar1_phi = 1.0;
    CHECK_THROWS_AS(generate_synthetic_station(cfg), Error);
    cfg.ar1_phi = 0.4;
    cfg.noise_sd = 0.0;
    CHECK_THROWS_AS(generate_synthetic_station(cfg), Error);
    cfg.noise_sd = 1.0;
    cfg.n_days = 0;
    CHECK_THROWS_AS(generate_synthetic_station(cfg), Error);
  }

  TEST_CASE("lagged linear effect shows up in the daily mean") {
    SynthConfig cfg;
    cfg.n_days = 400;
    cfg.seasonal_amplitude = 0.0;
    cfg.effects = {Effect{Field::WindSpeed, EffectShape::Linear, 3.0, 14}};
    const auto st = generate_synthetic_station(cfg);
    // Daily mean minus base is linear in the standardised driver, so its
    // variance is magnitude^2 times the driver variance: clearly nonzero.
    double var = 0;
    for (double m : st.daily_mean) var += (m - cfg.base_temp) * (m - cfg.base_temp);
    var /= static_cast<double>(st.daily_mean.size());
    CHECK(var > 1.0);
    cfg.effects[0].shape = EffectShape::Step;
    const auto step = generate_synthetic_station(cfg);
    for (double m : step.daily_mean) {
      const double e = m - cfg.base_temp;
      CHECK((std::abs(e) < 1e-12 || std::abs(e - 3.0) < 1e-12));
    }
  }

  TEST_CASE("split oracle examples") {
    Matrix X(4, 1);
    const std::vector<double> t{1, 1, 5, 5};
    for (std::size_t i = 0; i < 4; ++i) X(i, 0) = static_cast<double>(i) * 2.0;
    const auto s = brute_force_split_oracle(X, t);
    CHECK(s.found);
    CHECK(s.feature == 0);
    CHECK(s.threshold == 3.0);
    CHECK(s.sse_reduction == doctest::Approx(16.0));

    const auto none = brute_force_split_oracle(X, std::vector<double>(4, 2.0));
    CHECK_FALSE(none.found);
    CHECK(none.sse_reduction == 0.0);
    CHECK_THROWS_AS(brute_force_split_oracle(Matrix(17, 1), std::vector<double>(17, 0.0)), Error);
    CHECK_THROWS_AS(brute_force_split_oracle(Matrix(4, 5), t), Error);
  }

  TEST_CASE("constant oracle examples") {
    CHECK(brute_force_constant_oracle(std::vector<double>{1, 2, 3}, 0.5) == 2.0);
    std::vector<double> hundred(100);
    for (int i = 0; i < 100; ++i) hundred[i] = i + 1;
    CHECK(brute_force_constant_oracle(hundred, 0.95) == 95.0);
    CHECK_THROWS_AS(brute_force_constant_oracle(std::vector<double>{}, 0.5), Error);
    CHECK_THROWS_AS(brute_force_constant_oracle(std::vector<double>(1001, 0.0), 0.5), Error);
  }
}
