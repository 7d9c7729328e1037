#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "heatcast/calendar.hpp"
#include "heatcast/random.hpp"
#include "heatcast/station_data.hpp"

namespace fixtures {

// Design with dates from 2019-04-01, predictor names x0..x{p-1}.
inline heatcast::station::DesignMatrix make_design(const heatcast::Matrix& X, const std::vector<double>& y,
                                                   int year = 2019) {
  heatcast::station::DesignMatrix d;
  d.response_name = "y";
  d.X = X;
  d.y = y;
  d.year = year;
  d.lag_days = 14;
  const heatcast::Date start{std::chrono::year{year} / 4 / 1};
  for (std::size_t i = 0; i < y.size(); ++i) d.dates.push_back(start + std::chrono::days{static_cast<int>(i)});
  for (std::size_t j = 0; j < X.cols(); ++j) d.predictor_names.push_back("x" + std::to_string(j));
  d.missing_mask.assign(X.rows() * X.cols(), 0);
  return d;
}

// Uniform(0,1) features, y = f(row) + noise_sd * N(0,1).
inline heatcast::station::DesignMatrix random_design(std::uint64_t seed, std::size_t n, std::size_t p,
                                                     const std::function<double(std::span<const double>)>& f,
                                                     double noise_sd, int year = 2019) {
  heatcast::Rng rng(seed);
  heatcast::Matrix X(n, p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) X(i, j) = rng.uniform();
    y[i] = f(X.row(i)) + noise_sd * rng.normal();
  }
  return make_design(X, y, year);
}

}  // namespace fixtures
