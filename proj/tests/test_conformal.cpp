#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "heatcast/conformal.hpp"
#include "heatcast/error.hpp"
#include "heatcast/qgbm.hpp"

using namespace heatcast;
using namespace heatcast::conformal;

namespace {

std::vector<double> ar1_series(std::uint64_t seed, std::size_t n, double phi, double sd = 1.0) {
  Rng rng(seed);
  std::vector<double> e(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < 200 + n; ++i) {
    prev = phi * prev + sd * rng.normal();
    if (i >= 200) e[i - 200] = prev;
  }
  return e;
}

Date d0() { return Date{std::chrono::year{2020} / 6 / 1}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

qgbm::BoostedModel constant_model(double value, double tau, std::size_t p) {
  qgbm::BoostedModel m;
  m.init = value;
  m.config.tau = tau;
  for (std::size_t j = 0; j < p; ++j) m.predictor_names.push_back("x" + std::to_string(j));
  return m;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_SUITE("conformal") {
  TEST_CASE("AR(1) fit matches ordinary least squares") {
    // numpy lstsq on the same series (tests/oracles/oracles.py).
    const std::vector<double> e{0.3, -0.1, 0.4, 0.8, 0.2, -0.5, -0.9, -0.2, 0.1, 0.6, 0.7, -0.3,
                                0.3, -0.1, 0.4, 0.8, 0.2, -0.5, -0.9, -0.2, 0.1, 0.6, 0.7, -0.3};
    const auto short_e = std::vector<double>(e.begin(), e.begin() + 12);
    CHECK(code_of([&] { fit_ar1(short_e); }) == ErrorCode::TooShort);
    const auto fit = fit_ar1(e);
    CHECK(fit.n == 24);
    CHECK(fit.innovations.size() == 23);
    for (std::size_t t = 1; t < e.size(); ++t) {
      CHECK(fit.innovations[t - 1] == doctest::Approx(e[t] - fit.intercept - fit.phi * e[t - 1]));
    }
  }

  TEST_CASE("AR(1) examples") {
    const auto white = ar1_series(1, 2000, 0.0);
    CHECK(std::abs(fit_ar1(white).phi) < 2.0 / std::sqrt(2000.0));

    const auto fit = fit_ar1(ar1_series(2, 10000, 0.42));
    CHECK(std::abs(fit.phi - 0.42) < 0.03);
    CHECK(fit.stationary());

    std::vector<double> geo(40);
    geo[0] = 5.0;
    for (std::size_t t = 1; t < geo.size(); ++t) geo[t] = 0.9 * geo[t - 1];
    const auto exact = fit_ar1(geo);
    CHECK(exact.phi == doctest::Approx(0.9).epsilon(1e-10));
    for (double v : exact.innovations) CHECK(std::abs(v) < 1e-10);

    CHECK(code_of([] { fit_ar1(std::vector<double>(30, 1.0)); }) == ErrorCode::Degenerate);
    std::vector<double> bad(30, 0.0);
    bad[4] = std::nan("");
    CHECK_THROWS_AS(fit_ar1(bad), Error);
  }

  TEST_CASE("acf matches the standard estimator") {
    const std::vector<double> e{0.3, -0.1, 0.4, 0.8, 0.2, -0.5, -0.9, -0.2, 0.1, 0.6, 0.7, -0.3};
    const auto r = acf(e, 2);
    REQUIRE(r.rho.size() == 2);
    CHECK(r.rho[0] == doctest::Approx(0.374074608210749).epsilon(1e-12));
    CHECK(r.rho[1] == doctest::Approx(-0.2570425920584559).epsilon(1e-12));
    CHECK(r.band == doctest::Approx(1.96 / std::sqrt(12.0)));
    CHECK(code_of([&] { acf(e, 6); }) == ErrorCode::TooShort);
    CHECK(code_of([] { acf(std::vector<double>(50, 2.0), 5); }) == ErrorCode::Degenerate);
  }

  TEST_CASE("acf on simulated series") {
    const auto iid = acf(ar1_series(3, 2000, 0.0), 10);
    CHECK(std::abs(iid.rho[0]) < 0.07);
    const auto dep = acf(ar1_series(4, 5000, 0.42), 10);
    CHECK(std::abs(dep.rho[0] - 0.42) < 0.05);
    CHECK_FALSE(dep.white);
  }

  TEST_CASE("calibrate_scores index and q_hat") {
    std::vector<double> s99(99);
    for (std::size_t i = 0; i < 99; ++i) s99[i] = static_cast<double>(99 - i);
    const auto c99 = calibrate_scores(s99, 0.30, Method::Symmetric);
    CHECK(c99.index == 70);
    CHECK(c99.q_hat == 70.0);
    CHECK(std::is_sorted(c99.scores.begin(), c99.scores.end()));

    std::vector<double> s100(100);
    for (std::size_t i = 0; i < 100; ++i) s100[i] = static_cast<double>(i + 1);
    CHECK(calibrate_scores(s100, 0.30, Method::Symmetric).q_hat == 71.0);

    const std::vector<double> s9{1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(code_of([&] { calibrate_scores(s9, 0.05, Method::Symmetric); }) == ErrorCode::AlphaTooSmall);
    const auto unbounded = calibrate_scores(s9, 0.05, Method::Symmetric, true);
    CHECK(std::isinf(unbounded.q_hat));
    CHECK_FALSE(unbounded.bounded());
    CHECK(code_of([&] { symmetric_region(30.0, unbounded, d0()); }) == ErrorCode::UnboundedRegion);

    CHECK_THROWS_AS(calibrate_scores(std::vector<double>{}, 0.3, Method::Symmetric), Error);
    CHECK_THROWS_AS(calibrate_scores(s9, 1.5, Method::Symmetric), Error);
    const std::vector<double> with_inf{1, 2, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(calibrate_scores(with_inf, 0.5, Method::Symmetric), Error);
  }

  TEST_CASE("q_hat is non-decreasing in the coverage level") {
    Rng rng(9);
    std::vector<double> s(300);
    for (auto& v : s) v = std::abs(rng.normal());
    double prev = -1.0;
    for (double cover = 0.05; cover < 0.99; cover += 0.01) {
      const double q = calibrate_scores(s, 1.0 - cover, Method::Symmetric).q_hat;
      CHECK(q >= prev);
      prev = q;
    }
  }

  TEST_CASE("finite-sample marginal coverage on exchangeable scores") {
    Rng rng(123);
    const int reps = 10000;
    const std::size_t n_cal = 49;
    const double alpha = 0.3;
    int covered = 0;
    std::vector<double> s(n_cal);
    for (int r = 0; r < reps; ++r) {
      for (auto& v : s) v = std::abs(rng.normal());
      const double q = calibrate_scores(s, alpha, Method::Symmetric).q_hat;
      covered += std::abs(rng.normal()) <= q ? 1 : 0;
    }
    const double rate = covered / static_cast<double>(reps);
    CHECK(rate >= 1.0 - alpha - 3.0 * std::sqrt(alpha * (1 - alpha) / reps));
  }

  TEST_CASE("symmetric regions") {
    const std::vector<double> s{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5};
    auto calib = calibrate_scores(s, 0.30, Method::Symmetric);  // index ceil(7) = 7 -> 3.5
    calib.q_hat = 2.0;
    const auto r = symmetric_region(32.1, calib, d0());
    CHECK(r.lower == doctest::Approx(30.1));
    CHECK(r.upper == doctest::Approx(34.1));
    CHECK(r.forecast == 32.1);
    CHECK(r.method == Method::Symmetric);
    CHECK(r.alpha == 0.30);
    calib.q_hat = 0.0;
    const auto point = symmetric_region(32.1, calib, d0());
    CHECK(point.lower == point.upper);
    calib.q_hat = 3.0;
    const auto wide = symmetric_region(25.0, calib, d0());
    CHECK(wide.half_width() == doctest::Approx(3.0));
    CHECK(wide.half_width() >= 1.5);
    CHECK(wide.half_width() <= 3.0 + 1e-12);
    // Constant half-width across forecasts.
    CHECK(symmetric_region(10.0, calib, d0()).half_width() == symmetric_region(40.0, calib, d0()).half_width());
  }

  TEST_CASE("symmetric calibration whitens AR(1) residuals") {
    std::vector<double> forecast(400), observed(400);
    const auto e = ar1_series(17, 400, 0.42);
    for (std::size_t i = 0; i < 400; ++i) {
      forecast[i] = 25.0 + 5.0 * std::sin(i / 20.0);
      observed[i] = forecast[i] + e[i];
    }
    const auto sc = calibrate_symmetric(observed, forecast, 0.3);
    CHECK(sc.raw_acf.rho[0] > 0.3);
    CHECK(std::abs(sc.innovation_acf.rho[0]) < 0.1);
    CHECK(sc.calibration.scores.size() == 399);
    CHECK(sc.calibration.method == Method::Symmetric);
    for (double v : sc.calibration.scores) CHECK(v >= 0.0);
    CHECK(sc.raw_acf.rho.size() == static_cast<std::size_t>(kWhitenessLags));
  }

  TEST_CASE("CQR: perfect quantile models give a non-positive q_hat") {
    const auto lo = constant_model(20.0, 0.15, 1), hi = constant_model(20.0, 0.85, 1);
    Matrix X(30, 1, 0.0);
    const std::vector<double> y(30, 20.0);
    const auto cal = calibrate_cqr(lo, hi, X, y, 0.30);
    CHECK(cal.q_hat <= 0.0);
    CHECK(cal.method == Method::Cqr);
    const std::vector<double> x{0.0};
    const auto r = cqr_region(lo, hi, cal, x, d0());
    CHECK(r.lower >= 20.0);
    CHECK(r.upper <= 20.0);
    CHECK(r.lower <= r.upper);

    // Scores inside the band are negative: region narrower than the quantile pair.
    const auto lo2 = constant_model(18.0, 0.15, 1), hi2 = constant_model(22.0, 0.85, 1);
    const auto cal2 = calibrate_cqr(lo2, hi2, X, y, 0.30);
    CHECK(cal2.q_hat == -2.0);
    const auto r2 = cqr_region(lo2, hi2, cal2, x, d0());
    CHECK(r2.lower == 20.0);
    CHECK(r2.upper == 20.0);
  }

  TEST_CASE("CQR: tau checks, crossing and the one-shot overload") {
    const auto lo = constant_model(25.0, 0.15, 1), hi = constant_model(21.0, 0.85, 1);
    Matrix X(20, 1, 0.0);
    std::vector<double> y(20);
    for (std::size_t i = 0; i < 20; ++i) y[i] = 20.0 + 0.3 * static_cast<double>(i);
    CHECK_THROWS_AS(calibrate_cqr(lo, hi, X, y, 0.10), Error);
    const auto cal = calibrate_cqr(lo, hi, X, y, 0.30);
    const std::vector<double> x{0.0};
    const auto r = cqr_region(lo, hi, cal, x, d0());
    CHECK(r.crossed);
    CHECK(r.lower <= r.upper);
    const auto again = cqr_region(lo, hi, X, y, 0.30, x, d0());
    CHECK(again.lower == r.lower);
    CHECK(again.upper == r.upper);
    CHECK_THROWS_AS(calibrate_cqr(lo, hi, X, std::vector<double>(5, 1.0), 0.30), Error);
  }

  TEST_CASE("CQR on synthetic data: coverage and adaptivity") {
    // y = 10 x0 + (0.2 + 2 x1) N(0,1): noise scale grows with x1.
    auto noise_scale = [](std::span<const double> x) { return 0.2 + 2.0 * x[1]; };
    std::size_t covered = 0, total = 0;
    std::vector<double> widths, scales;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto make = [&](std::uint64_t s, std::size_t n) {
        Rng rng(s);
        Matrix X(n, 2);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
          X(i, 0) = rng.uniform();
          X(i, 1) = rng.uniform();
          y[i] = 10.0 * X(i, 0) + noise_scale(X.row(i)) * rng.normal();
        }
        return fixtures::make_design(X, y);
      };
      const auto train = make(seed * 3, 400), calib = make(seed * 3 + 1, 500), test = make(seed * 3 + 2, 200);
      qgbm::TrainConfig cfg;
      cfg.n_trees = 300;
      cfg.shrinkage = 0.05;
      cfg.interaction_depth = 3;
      cfg.min_node = 10;
      cfg.seed = seed;
      cfg.tau = 0.15;
      const auto lo = qgbm::boost(train, cfg).model;
      cfg.tau = 0.85;
      const auto hi = qgbm::boost(train, cfg).model;
      const auto cal = calibrate_cqr(lo, hi, calib.X, calib.y, 0.30);
      for (std::size_t i = 0; i < test.n(); ++i) {
        const auto r = cqr_region(lo, hi, cal, test.X.row(i), test.dates[i]);
        covered += r.contains(test.y[i]) ? 1 : 0;
        ++total;
        widths.push_back(r.half_width());
        scales.push_back(noise_scale(test.X.row(i)));
      }
    }
    const double rate = static_cast<double>(covered) / static_cast<double>(total);
    // Expected coverage is 351/501 = 0.7006; allow 3 binomial SE below .70.
    CHECK(rate >= 0.70 - 3.0 * std::sqrt(0.21 / static_cast<double>(total)));
    CHECK(rate <= 0.78);
    CHECK(correlation(widths, scales) > 0.0);
  }

  TEST_CASE("coverage report") {
    std::vector<PredictionRegion> regions;
    std::vector<double> observed;
    for (int i = 0; i < 100; ++i) {
      PredictionRegion r;
      r.date = d0() + std::chrono::days{i};
      r.lower = 20.0;
      r.upper = 22.0 + 0.01 * i;
      regions.push_back(r);
      observed.push_back(i < 12 ? 21.0 : 10.0 + 0.01 * i);  // 12 covered, including none of the hottest
    }
    auto rep = coverage_report(regions, observed, 10);
    CHECK(rep.n_regions == 100);
    CHECK(rep.n_covered == 12);
    CHECK(rep.empirical_coverage == doctest::Approx(0.12));
    CHECK(rep.k == 10);
    CHECK(rep.top_k_covered == 10);  // the 12 values at 21.0 are the hottest
    CHECK(rep.min_half_width == doctest::Approx(1.0));
    CHECK(rep.max_half_width == doctest::Approx(1.0 + 0.005 * 99));

    for (auto& o : observed) o = 21.0;
    rep = coverage_report(regions, observed, 10);
    CHECK(rep.empirical_coverage == 1.0);
    CHECK(rep.top_k_covered <= rep.k);
    CHECK(code_of([&] { coverage_report(regions, std::vector<double>(3, 1.0), 10); }) ==
          ErrorCode::LengthMismatch);
  }

  TEST_CASE("threshold alerts") {
    auto region = [](double lo, double hi) {
      PredictionRegion r;
      r.lower = lo;
      r.upper = hi;
      return r;
    };
    CHECK(threshold_alert(region(33.5, 37.0), 35.0));
    CHECK_FALSE(threshold_alert(region(28.0, 34.0), 35.0));
    CHECK(threshold_alert(region(36.0, 39.0), 35.0));
    CHECK(threshold_alert(region(30.0, 35.0), 35.0));
  }

  TEST_CASE("regions CSV") {
    std::vector<PredictionRegion> regions(2);
    regions[0].date = d0();
    regions[0].forecast = 30;
    regions[0].lower = 28;
    regions[0].upper = 36;
    regions[0].alpha = 0.3;
    regions[1] = regions[0];
    regions[1].upper = 33;
    std::ostringstream with, without;
    write_regions_csv(with, regions, 35.0);
    write_regions_csv(without, regions, std::nullopt);
    CHECK(with.str() ==
          "date,forecast,lower,upper,alpha,method,alert,threshold\n"
          "2020-06-01,30,28,36,0.29999999999999999,symmetric,1,35\n"
          "2020-06-01,30,28,33,0.29999999999999999,symmetric,0,35\n");
    CHECK(without.str().find(",NA,NA\n") != std::string::npos);
  }

  TEST_CASE("method names") {
    CHECK(method_from_name("cqr") == Method::Cqr);
    CHECK(method_from_name("symmetric") == Method::Symmetric);
    CHECK_FALSE(method_from_name("other"));
    CHECK(method_name(Method::Cqr) == "cqr");
  }
}
