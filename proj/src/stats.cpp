#include "heatcast/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "heatcast/csv.hpp"
#include "heatcast/error.hpp"
#include "heatcast/numeric.hpp"

namespace heatcast::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reduced variate t(x) with F(x) = exp(-t(x)); nullopt outside the support.
std::optional<double> gev_t(double location, double scale, double shape, double x) {
  const double z = (x - location) / scale;
  if (std::abs(shape) < kGumbelShapeCutoff) return std::exp(-z);
  const double base = 1.0 + shape * z;
  if (!(base > 0.0)) return std::nullopt;
  return std::pow(base, -1.0 / shape);
}

}  // namespace

double gev_cdf(const GevFit& fit, double x) {
  auto t = gev_t(fit.location, fit.scale, fit.shape, x);
  if (!t) return fit.shape > 0.0 ? 0.0 : 1.0;  // below the lower / above the upper endpoint
  return std::exp(-*t);
}

double gev_density(const GevFit& fit, double x) {
  auto t = gev_t(fit.location, fit.scale, fit.shape, x);
  if (!t) return 0.0;
  const double shape = std::abs(fit.shape) < kGumbelShapeCutoff ? 0.0 : fit.shape;
  return std::pow(*t, shape + 1.0) * std::exp(-*t) / fit.scale;
}

double gev_quantile(const GevFit& fit, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "gev_quantile needs p in (0, 1)");
  const double y = -std::log(p);
  if (std::abs(fit.shape) < kGumbelShapeCutoff) return fit.location - fit.scale * std::log(y);
  return fit.location + fit.scale * std::expm1(-fit.shape * std::log(y)) / fit.shape;
}

double gev_log_likelihood(std::span<const double> sample, double location, double scale, double shape) {
  if (!(scale > 0.0)) return -kInf;
  const bool gumbel = std::abs(shape) < kGumbelShapeCutoff;
  double ll = -static_cast<double>(sample.size()) * std::log(scale);
  for (double x : sample) {
    const double z = (x - location) / scale;
    if (gumbel) {
      ll -= z + std::exp(-z);
      continue;
    }
    const double base = 1.0 + shape * z;
    if (!(base > 0.0)) return -kInf;
    const double log_base = std::log(base);
    ll -= (1.0 + 1.0 / shape) * log_base + std::exp(-log_base / shape);
  }
  return ll;
}

GevFit gev_from_l_moments(std::span<const double> sample) {
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto j = static_cast<double>(i);  // 0-based rank
    b0 += x[i];
    b1 += j / (n - 1.0) * x[i];
    b2 += j * (j - 1.0) / ((n - 1.0) * (n - 2.0)) * x[i];
  }
  b0 /= n;
  b1 /= n;
  b2 /= n;
  const double l1 = b0, l2 = 2.0 * b1 - b0, l3 = 6.0 * b2 - 6.0 * b1 + b0;
  const double t3 = l3 / l2;
  const double c = 2.0 / (3.0 + t3) - std::log(2.0) / std::log(3.0);
  const double k = 7.8590 * c + 2.9554 * c * c;  // Hosking's k = -xi
  GevFit fit;
  if (std::abs(k) < 1e-8) {
    fit.scale = l2 / std::log(2.0);
    fit.location = l1 - 0.5772156649015329 * fit.scale;
    fit.shape = 0.0;
  } else {
    const double g = std::tgamma(1.0 + k);
    fit.scale = l2 * k / ((1.0 - std::pow(2.0, -k)) * g);
    fit.location = l1 - fit.scale * (1.0 - g) / k;
    fit.shape = -k;
  }
  fit.log_likelihood = gev_log_likelihood(sample, fit.location, fit.scale, fit.shape);
  return fit;
}

namespace {

struct SimplexResult {
  std::array<double, 3> point;
  double value;
  int iterations;
  bool converged;
};

// Nelder-Mead with the standard coefficients (1, 2, 0.5, 0.5) and a
// relative function-value tolerance, as in R's optim().
template <class F>
SimplexResult nelder_mead(F&& objective, std::array<double, 3> start, std::array<double, 3> step, double reltol,
                          int max_iter) {
  constexpr std::size_t d = 3;
  std::array<std::array<double, 3>, d + 1> pts;
  std::array<double, d + 1> vals;
  pts[0] = start;
  for (std::size_t i = 0; i < d; ++i) {
    pts[i + 1] = start;
    pts[i + 1][i] += step[i];
  }
  for (std::size_t i = 0; i <= d; ++i) vals[i] = objective(pts[i]);

  auto order = [&] {
    std::array<std::size_t, d + 1> idx{0, 1, 2, 3};
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    auto p2 = pts;
    auto v2 = vals;
    for (std::size_t i = 0; i <= d; ++i) {
      pts[i] = p2[idx[i]];
      vals[i] = v2[idx[i]];
    }
  };
  auto combine = [](const std::array<double, 3>& a, const std::array<double, 3>& b, double t) {
    std::array<double, 3> r;
    for (std::size_t i = 0; i < d; ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
  };

  for (int iter = 1; iter <= max_iter; ++iter) {
    order();
    if (std::isfinite(vals[d]) && vals[d] - vals[0] <= reltol * (std::abs(vals[0]) + reltol)) {
      return {pts[0], vals[0], iter, true};
    }
    std::array<double, 3> centroid{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k] / static_cast<double>(d);
    }
    const auto reflected = combine(centroid, pts[d], -1.0);
    const double fr = objective(reflected);
    if (fr < vals[0]) {
      const auto expanded = combine(centroid, pts[d], -2.0);
      const double fe = objective(expanded);
      if (fe < fr) {
        pts[d] = expanded;
        vals[d] = fe;
      } else {
        pts[d] = reflected;
        vals[d] = fr;
      }
      continue;
    }
    if (fr < vals[d - 1]) {
      pts[d] = reflected;
      vals[d] = fr;
      continue;
    }
    const bool outside = fr < vals[d];
    const auto contracted = outside ? combine(centroid, reflected, 0.5) : combine(centroid, pts[d], 0.5);
    const double fc = objective(contracted);
    if (fc < std::min(fr, vals[d])) {
      pts[d] = contracted;
      vals[d] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= d; ++i) {
      pts[i] = combine(pts[0], pts[i], 0.5);
      vals[i] = objective(pts[i]);
    }
  }
  order();
  return {pts[0], vals[0], max_iter, false};
}

}  // namespace

GevFit fit_gev(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 30) throw Error(ErrorCode::TooShort, "GEV fit needs at least 30 values, got " + std::to_string(n));
  for (double v : sample) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "GEV sample contains non-finite values");
  }
  const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
  if (*lo == *hi) throw Error(ErrorCode::ConstantSample, "GEV fit of a constant sample");

  GevFit start = gev_from_l_moments(sample);
  if (!(start.scale > 0.0) || !std::isfinite(start.scale)) {
    start.scale = (*hi - *lo) / 4.0;
    start.shape = 0.0;
    start.location = *lo + start.scale;
  }
  // Pull the start inside the support if the L-moment shape is too extreme.
  if (!std::isfinite(gev_log_likelihood(sample, start.location, start.scale, start.shape))) start.shape = 0.0;

  auto objective = [&](const std::array<double, 3>& p) {
    const double ll = gev_log_likelihood(sample, p[0], std::exp(p[1]), p[2]);
    return std::isfinite(ll) ? -ll : kInf;
  };
  const std::array<double, 3> x0{start.location, std::log(start.scale), start.shape};
  const std::array<double, 3> step{0.1 * start.scale, 0.1, 0.1};
  const SimplexResult r = nelder_mead(objective, x0, step, 1e-8, 500 * 3);

  GevFit fit;
  fit.location = r.point[0];
  fit.scale = std::exp(r.point[1]);
  fit.shape = r.point[2];
  fit.iterations = r.iterations;
  fit.log_likelihood = gev_log_likelihood(sample, fit.location, fit.scale, fit.shape);
  const bool in_support = std::isfinite(fit.log_likelihood);
  fit.converged = r.converged && in_support && fit.shape > -1.0 && fit.scale > 0.0;
  return fit;
}

LoessFit loess_smooth(std::span<const double> x, std::span<const double> y, double span) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "loess x and y differ in length");
  const std::size_t n = x.size();
  if (n < 10) throw Error(ErrorCode::TooShort, "loess needs at least 10 points");
  if (!(span > 0.0 && span <= 1.0)) throw Error(ErrorCode::InvalidArgument, "span must lie in (0, 1]");

  // Work in (x, y) order so results do not depend on input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const std::size_t q = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(span * static_cast<double>(n))),
                                                2, n);

  LoessFit fit;
  fit.span = span;
  std::vector<double> fitted(n), leverage_sq(n), self_weight(n), dist(n), w(n);
  for (std::size_t e = 0; e < n; ++e) {
    const double x0 = xs[e];
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(xs[i] - x0);
    std::vector<double> sorted_dist(dist);
    std::nth_element(sorted_dist.begin(), sorted_dist.begin() + static_cast<std::ptrdiff_t>(q - 1), sorted_dist.end());
    double h = sorted_dist[q - 1];
    // Points exactly at distance h would get zero weight; widen slightly so
    // the q-th neighbour keeps a small positive weight.
    h *= 1.0 + 1e-10;
    double sw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (h > 0.0 && dist[i] < h) {
        const double u = dist[i] / h;
        const double c = 1.0 - u * u * u;
        w[i] = c * c * c;
      } else {
        w[i] = (h == 0.0 && dist[i] == 0.0) ? 1.0 : 0.0;
      }
      sw += w[i];
    }
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      xbar += w[i] * xs[i];
      ybar += w[i] * ys[i];
    }
    xbar /= sw;
    ybar /= sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += w[i] * (xs[i] - xbar) * (xs[i] - xbar);
      sxy += w[i] * (xs[i] - xbar) * (ys[i] - ybar);
    }
    const double scale = std::max(std::abs(xbar), h);
    const bool singular = !(sxx > 1e-12 * sw * scale * scale);
    if (singular) ++fit.singular_points;
    const double slope = singular ? 0.0 : sxy / sxx;
    fitted[e] = ybar + slope * (x0 - xbar);
    double l2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double li = w[i] / sw + (singular ? 0.0 : (x0 - xbar) * (xs[i] - xbar) * w[i] / sxx);
      l2 += li * li;
      if (i == e) self_weight[e] = li;
    }
    leverage_sq[e] = l2;
  }
  double rss = 0.0, trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rss += (ys[i] - fitted[i]) * (ys[i] - fitted[i]);
    trace += self_weight[i];
  }
  const double df = std::max(static_cast<double>(n) - trace, 1.0);
  fit.residual_scale = std::sqrt(rss / df);

  fit.fitted.resize(n);
  fit.lower_band.resize(n);
  fit.upper_band.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double se = fit.residual_scale * std::sqrt(leverage_sq[i]);
    fit.fitted[order[i]] = fitted[i];
    fit.lower_band[order[i]] = fitted[i] - 2.0 * se;
    fit.upper_band[order[i]] = fitted[i] + 2.0 * se;
  }
  return fit;
}

Summary summarize_distribution(std::span<const double> sample) {
  if (sample.empty()) throw Error(ErrorCode::EmptySample, "summary of an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.n = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  for (double p : s.probabilities) s.quantiles.push_back(linear_quantile(sorted, p));
  return s;
}

double Histogram::density(std::size_t bin) const {
  const double w = width(bin);
  return (n == 0 || !(w > 0.0)) ? 0.0 : static_cast<double>(counts[bin]) / (static_cast<double>(n) * w);
}

Histogram histogram(std::span<const double> sample, std::size_t bins) {
  if (sample.empty()) throw Error(ErrorCode::EmptySample, "histogram of an empty sample");
  const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
  double lo = *lo_it, hi = *hi_it;
  if (bins == 0) bins = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(sample.size())))) + 1;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.n = sample.size();
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + width * static_cast<double>(b));
  for (double v : sample) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    h.counts[std::min(b, bins - 1)] += 1;
  }
  return h;
}

void write_histogram_csv(std::ostream& out, const Histogram& hist, const std::optional<GevFit>& gev) {
  const std::size_t bins = hist.counts.size();
  std::vector<double> mids(bins), dens(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    mids[b] = hist.midpoint(b);
    dens[b] = hist.density(b);
  }
  std::optional<LoessFit> smooth;
  if (bins >= 10) smooth = loess_smooth(mids, dens, 0.75);
  csv::write_row(out, {"bin_lower", "bin_upper", "midpoint", "count", "density", "gev_density", "loess_density"});
  for (std::size_t b = 0; b < bins; ++b) {
    const bool overlay = gev && gev->converged;
    csv::write_row(out, {csv::format_double(hist.edges[b]), csv::format_double(hist.edges[b + 1]),
                         csv::format_double(mids[b]), std::to_string(hist.counts[b]), csv::format_double(dens[b]),
                         overlay ? csv::format_double(gev_density(*gev, mids[b])) : "NA",
                         smooth ? csv::format_double(smooth->fitted[b]) : "NA"});
  }
}

void write_loess_csv(std::ostream& out, std::span<const double> x, const LoessFit& fit) {
  csv::write_row(out, {"x", "fitted", "lower_band", "upper_band"});
  for (std::size_t i = 0; i < x.size(); ++i) {
    csv::write_row(out, {csv::format_double(x[i]), csv::format_double(fit.fitted[i]),
                         csv::format_double(fit.lower_band[i]), csv::format_double(fit.upper_band[i])});
  }
}

}  // namespace heatcast::stats
