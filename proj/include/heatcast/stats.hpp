#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace heatcast::stats {

struct GevFit {
  double location = 0.0;  // mu
  double scale = 1.0;     // sigma
  double shape = 0.0;     // xi; xi > 0 is the heavy (Frechet) tail
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Below this |xi| the Gumbel limit is used.
inline constexpr double kGumbelShapeCutoff = 1e-6;

double gev_cdf(const GevFit& fit, double x);
double gev_density(const GevFit& fit, double x);  // 0 outside the support
double gev_quantile(const GevFit& fit, double p);  // p in (0, 1)
double gev_log_likelihood(std::span<const double> sample, double location, double scale, double shape);

// Hosking's L-moment estimator; the starting point for fit_gev.
GevFit gev_from_l_moments(std::span<const double> sample);

// Maximum likelihood by Nelder-Mead over (mu, log sigma, xi) from the
// L-moment start (relative tolerance 1e-8, at most 500 iterations per
// parameter). Non-convergence is reported through `converged`: iteration
// budget exhausted, support violated at the optimum, or xi <= -1 where the
// likelihood is unbounded. Throws TooShort (n < 30) and ConstantSample.
GevFit fit_gev(std::span<const double> sample);

struct LoessFit {
  double span = 0.75;
  int degree = 1;
  std::vector<double> fitted;
  std::vector<double> lower_band;  // fitted - 2 SE
  std::vector<double> upper_band;  // fitted + 2 SE
  double residual_scale = 0.0;
  std::size_t singular_points = 0;  // evaluation points that fell back to a local mean
};

// Local linear regression with tricube weights over the ceil(span*n) nearest
// neighbours, evaluated at each input abscissa. Bands are the conventional
// pointwise +/- 2 SE, which assume independent homoscedastic errors.
// Throws TooShort (n < 10) and LengthMismatch.
LoessFit loess_smooth(std::span<const double> x, std::span<const double> y, double span = 0.75);

struct Summary {
  std::size_t n = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single value
  std::vector<double> probabilities{0.05, 0.25, 0.5, 0.75, 0.95};
  std::vector<double> quantiles;
};

// Throws EmptySample.
Summary summarize_distribution(std::span<const double> sample);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
  std::size_t n = 0;

  [[nodiscard]] double width(std::size_t bin) const { return edges[bin + 1] - edges[bin]; }
  [[nodiscard]] double midpoint(std::size_t bin) const { return 0.5 * (edges[bin] + edges[bin + 1]); }
  [[nodiscard]] double density(std::size_t bin) const;
};

// Equal-width bins over [min, max]; 0 bins selects Sturges' rule.
Histogram histogram(std::span<const double> sample, std::size_t bins = 0);

// bin_lower, bin_upper, midpoint, count, density, gev_density, loess_density.
// GEV column is NA unless the fit converged; the loess column smooths the bin
// densities (NA when there are fewer than 10 bins).
void write_histogram_csv(std::ostream& out, const Histogram& hist, const std::optional<GevFit>& gev);

// x, fitted, lower_band, upper_band
void write_loess_csv(std::ostream& out, std::span<const double> x, const LoessFit& fit);

}  // namespace heatcast::stats
