#pragma once

#include <string>
#include <vector>

namespace heatcast::cli::svg {

enum class Style { Points, Line, Bars };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  Style style = Style::Points;
  std::string color = "black";
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<std::string> categories;  // x tick labels at 0, 1, ... when non-empty
};

// Fixed 640x420 canvas; coordinates are printed with two decimals so output
// is byte-stable for identical data.
std::string render(const Chart& chart);

}  // namespace heatcast::cli::svg
