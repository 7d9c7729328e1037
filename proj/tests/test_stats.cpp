#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "heatcast/csv.hpp"
#include "heatcast/error.hpp"
#include "heatcast/random.hpp"
#include "heatcast/stats.hpp"

using namespace heatcast;
using namespace heatcast::stats;

namespace {

// Inverse-CDF sampler written independently of gev_quantile.
std::vector<double> gev_sample(std::uint64_t seed, std::size_t n, double mu, double sigma, double xi) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) {
    double u = rng.uniform();
    while (u == 0.0) u = rng.uniform();
    v = mu + sigma * (std::pow(-std::log(u), -xi) - 1.0) / xi;
  }
  return out;
}

GevFit params(double mu, double sigma, double xi) {
  GevFit f;
  f.location = mu;
  f.scale = sigma;
  f.shape = xi;
  f.converged = true;
  return f;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("GEV density, CDF and quantile against scipy") {
    // scipy.stats.genextreme(c=-0.1, loc=25, scale=3); scipy's c is -xi.
    const auto g = params(25, 3, 0.1);
    CHECK(gev_density(g, 28.0) == doctest::Approx(0.07945475364000983).epsilon(1e-12));
    CHECK(gev_cdf(g, 28.0) == doctest::Approx(0.680081054970499).epsilon(1e-12));
    CHECK(gev_quantile(g, 0.9) == doctest::Approx(32.571061548115466).epsilon(1e-12));
    const std::vector<double> xs{24, 25, 27, 31};
    CHECK(gev_log_likelihood(xs, 25, 3, 0.1) == doctest::Approx(-9.826524125247758).epsilon(1e-12));

    const auto gumbel = params(25, 3, 0.0);
    CHECK(gev_density(gumbel, 25.0) == doctest::Approx(std::exp(-1.0) / 3.0).epsilon(1e-14));
    CHECK(gev_density(params(25, 3, 1e-9), 25.0) == doctest::Approx(std::exp(-1.0) / 3.0).epsilon(1e-8));

    // Bounded upper tail at mu + sigma/|xi| = 40.
    const auto bounded = params(25, 3, -0.2);
    CHECK(gev_density(bounded, 39.9) == doctest::Approx(6.584362139831594e-10).epsilon(1e-6));
    CHECK(gev_density(bounded, 40.5) == 0.0);
    CHECK(gev_cdf(bounded, 40.5) == 1.0);
    CHECK(gev_density(g, 0.0) == 0.0);  // below the lower bound mu - sigma/xi = -5
    CHECK(std::isinf(gev_log_likelihood(std::vector<double>{41.0}, 25, 3, -0.2)));
  }

  TEST_CASE("GEV quantile and CDF are inverse") {
    for (double xi : {-0.3, -1e-7, 0.0, 0.1, 0.4}) {
      const auto g = params(20, 2.5, xi);
      for (double p = 0.01; p < 1.0; p += 0.07) CHECK(std::abs(gev_cdf(g, gev_quantile(g, p)) - p) < 1e-10);
    }
    CHECK_THROWS_AS(gev_quantile(params(0, 1, 0), 1.0), Error);
  }

  TEST_CASE("GEV density integrates to one") {
    for (double xi : {-0.25, 0.0, 0.1}) {
      const auto g = params(25, 3, xi);
      const double lo = gev_quantile(g, 1e-12), hi = gev_quantile(g, 1.0 - 1e-9);
      const int n = 200000;
      const double h = (hi - lo) / n;
      double s = gev_density(g, lo) + gev_density(g, hi);
      for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * gev_density(g, lo + i * h);
      CHECK(std::abs(s * h / 3.0 - 1.0) < 1e-4);
    }
  }

  TEST_CASE("L-moment starting values match Hosking's estimator") {
    const std::vector<double> x{21.3, 24.8, 22.0, 29.5, 26.1, 23.4, 25.0, 31.2, 27.7, 22.9,
                                24.1, 26.8, 28.3, 23.7, 25.5, 30.4, 21.9, 24.6, 27.0, 26.2};
    const auto start = gev_from_l_moments(x);
    CHECK(start.location == doctest::Approx(24.389028039374985).epsilon(1e-10));
    CHECK(start.scale == doctest::Approx(2.612039481216438).epsilon(1e-10));
    CHECK(start.shape == doctest::Approx(-0.11853255312542882).epsilon(1e-10));
  }

  TEST_CASE("GEV maximum likelihood recovers known parameters") {
    const auto sample = gev_sample(7, 5000, 25, 3, 0.1);
    const auto fit = fit_gev(sample);
    CHECK(fit.converged);
    CHECK(std::abs(fit.location - 25) < 0.2);
    CHECK(std::abs(fit.scale - 3) < 0.2);
    CHECK(std::abs(fit.shape - 0.1) < 0.05);
    // The optimum beats the L-moment start and small perturbations of itself.
    const auto start = gev_from_l_moments(sample);
    CHECK(fit.log_likelihood >= gev_log_likelihood(sample, start.location, start.scale, start.shape));
    for (double d : {-1e-3, 1e-3}) {
      CHECK(fit.log_likelihood >= gev_log_likelihood(sample, fit.location + d, fit.scale, fit.shape) - 1e-6);
      CHECK(fit.log_likelihood >= gev_log_likelihood(sample, fit.location, fit.scale + d, fit.shape) - 1e-6);
      CHECK(fit.log_likelihood >= gev_log_likelihood(sample, fit.location, fit.scale, fit.shape + d) - 1e-6);
    }
    // Median of the fitted distribution tracks the sample median.
    auto sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::abs(gev_quantile(fit, 0.5) - 0.5 * (sorted[2499] + sorted[2500])) < 0.5);
  }

  TEST_CASE("GEV error and failure modes") {
    CHECK(code_of([] { fit_gev(std::vector<double>(100, 31.0)); }) == ErrorCode::ConstantSample);
    CHECK(code_of([] { fit_gev(std::vector<double>(10, 1.0)); }) == ErrorCode::TooShort);
    // Two tight clusters with most of the mass at a hard upper edge: the likelihood
    // runs off to xi <= -1 and the fit reports non-convergence.
    Rng rng(3);
    std::vector<double> cairo;
    for (int i = 0; i < 53; ++i) cairo.push_back(24.0 + 0.05 * rng.uniform());
    for (int i = 0; i < 100; ++i) cairo.push_back(41.0 + 0.05 * rng.uniform());
    const auto fit = fit_gev(cairo);
    CHECK_FALSE(fit.converged);
    std::ostringstream out;
    write_histogram_csv(out, histogram(cairo, 20), fit);
    CHECK(out.str().find(",NA,") != std::string::npos);
  }

  TEST_CASE("loess reproduces lines and constants") {
    std::vector<double> x, y, c;
    for (int i = 0; i < 40; ++i) {
      x.push_back(std::sin(i * 1.7) * 10.0);  // unsorted abscissae
      y.push_back(3.0 - 0.5 * x.back());
      c.push_back(7.25);
    }
    const auto line = loess_smooth(x, y, 0.3);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(line.fitted[i] - y[i]) < 1e-8);
    const auto flat = loess_smooth(x, c);
    for (double v : flat.fitted) CHECK(std::abs(v - 7.25) < 1e-12);
    CHECK(flat.span == 0.75);
    CHECK(flat.degree == 1);
  }

  TEST_CASE("loess matches a direct weighted least-squares oracle") {
    const std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    const std::vector<double> y{1.0, 2.5, 1.8, 3.9, 4.2, 3.7, 6.1, 5.5, 7.9, 8.2, 7.4, 9.9};
    const std::vector<double> want{1.158653077073252, 1.8941349614955754, 2.677965953353317, 3.2784196169202473,
                                   3.9448645573476058, 4.643626099527508, 5.3208378918926,   6.359205286401069,
                                   7.1314661648312185, 7.817921899831993, 8.572502182458699, 9.267210573446418};
    const auto fit = loess_smooth(x, y, 0.5);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(fit.fitted[i] == doctest::Approx(want[i]).epsilon(1e-9));
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(fit.lower_band[i] <= fit.fitted[i]);
      CHECK(fit.upper_band[i] >= fit.fitted[i]);
      CHECK(fit.upper_band[i] - fit.fitted[i] == doctest::Approx(fit.fitted[i] - fit.lower_band[i]));
    }
    CHECK(fit.residual_scale > 0.0);
  }

  TEST_CASE("loess smooths a noisy sine and ignores input order") {
    Rng rng(4);
    std::vector<double> x, y, truth;
    for (int i = 0; i < 300; ++i) {
      x.push_back(rng.uniform() * 2.0 * std::numbers::pi);
      truth.push_back(std::sin(x.back()));
      y.push_back(truth.back() + 0.4 * rng.normal());
    }
    const auto fit = loess_smooth(x, y, 0.3);
    double raw = 0, smooth = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      raw += (y[i] - truth[i]) * (y[i] - truth[i]);
      smooth += (fit.fitted[i] - truth[i]) * (fit.fitted[i] - truth[i]);
    }
    CHECK(smooth < raw);

    std::vector<std::size_t> perm(x.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 97) % perm.size();
    std::vector<double> px, py;
    for (auto k : perm) {
      px.push_back(x[k]);
      py.push_back(y[k]);
    }
    const auto pfit = loess_smooth(px, py, 0.3);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      CHECK(pfit.fitted[i] == fit.fitted[perm[i]]);
      CHECK(pfit.upper_band[i] == fit.upper_band[perm[i]]);
    }
  }

  TEST_CASE("loess edge cases") {
    CHECK(code_of([] { loess_smooth(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0)); }) ==
          ErrorCode::TooShort);
    CHECK(code_of([] { loess_smooth(std::vector<double>(12, 1.0), std::vector<double>(11, 1.0)); }) ==
          ErrorCode::LengthMismatch);
    // Repeated abscissae make every local design singular: local means instead.
    std::vector<double> x(20, 3.0), y(20);
    for (int i = 0; i < 20; ++i) y[i] = i % 2;
    const auto fit = loess_smooth(x, y, 0.5);
    CHECK(fit.singular_points == 20);
    for (double v : fit.fitted) CHECK(std::isfinite(v));
    CHECK_THROWS_AS(loess_smooth(x, y, 0.0), Error);
  }

  TEST_CASE("distribution summaries") {
    const std::vector<double> three{1, 2, 3};
    const auto s = summarize_distribution(three);
    CHECK(s.mean == 2.0);
    CHECK(s.sd == 1.0);
    CHECK(s.quantiles.size() == s.probabilities.size());
    const auto one = summarize_distribution(std::vector<double>{4.5});
    CHECK(one.min == 4.5);
    CHECK(one.max == 4.5);
    CHECK(one.mean == 4.5);
    CHECK(one.sd == 0.0);
    const std::vector<double> obs{10.2, 36.4, 21.5, 22.7, 23.9, 22.7, 21.6, 23.8};
    const auto p = summarize_distribution(obs);
    CHECK(p.min == 10.2);
    CHECK(p.max == 36.4);
    CHECK(p.mean == doctest::Approx(22.85));
    CHECK_THROWS_AS(summarize_distribution(std::vector<double>{}), Error);
  }

  TEST_CASE("histogram and CSV export") {
    std::vector<double> v;
    for (int i = 0; i < 100; ++i) v.push_back(i * 0.1);
    const auto h = histogram(v, 10);
    REQUIRE(h.counts.size() == 10);
    std::size_t total = 0;
    double area = 0;
    for (std::size_t b = 0; b < 10; ++b) {
      total += h.counts[b];
      area += h.density(b) * h.width(b);
    }
    CHECK(total == 100);
    CHECK(area == doctest::Approx(1.0));
    CHECK(histogram(v).counts.size() == 8);  // Sturges: ceil(log2 100) + 1

    const auto g = params(5, 2, 0.0);
    std::ostringstream out;
    write_histogram_csv(out, h, g);
    const auto table = csv::parse(out.str());
    CHECK(table.header == std::vector<std::string>{"bin_lower", "bin_upper", "midpoint", "count", "density",
                                                   "gev_density", "loess_density"});
    REQUIRE(table.rows.size() == 10);
    CHECK(*csv::parse_double(table.rows[3][5]) == doctest::Approx(gev_density(g, h.midpoint(3))));
    CHECK(csv::parse_double(table.rows[3][6]).has_value());

    std::ostringstream none;
    write_histogram_csv(none, histogram(v, 5), std::nullopt);
    const auto t2 = csv::parse(none.str());
    CHECK(t2.rows[0][5] == "NA");
    CHECK(t2.rows[0][6] == "NA");

    std::ostringstream lo;
    const auto lf = loess_smooth(v, v);
    write_loess_csv(lo, v, lf);
    CHECK(lo.str().rfind("x,fitted,lower_band,upper_band\n", 0) == 0);
  }
}
