#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heatcast/matrix.hpp"
#include "heatcast/station_data.hpp"

namespace heatcast::qgbm {

struct TrainConfig {
  double tau = 0.95;
  int n_trees = 10000;
  double shrinkage = 0.001;
  int interaction_depth = 4;  // splits per tree
  double bag_fraction = 0.5;
  int min_node = 10;          // minimum in-bag rows per leaf
  std::uint64_t seed = 1;

  // Throws InvalidArgument when a field is out of range.
  void validate() const;
};

// Pinball loss: tau*(y - yhat) when y >= yhat, else (1 - tau)*(yhat - y).
double quantile_loss(double y, double yhat, double tau);

// Negative subgradient of the pinball loss in yhat. y == yhat takes the tau
// branch, matching the loss convention.
double negative_gradient(double y, double yhat, double tau);

double mean_quantile_loss(std::span<const double> y, std::span<const double> yhat, double tau);

// Lower empirical quantile: the ceil(n*tau)-th order statistic (1-based,
// clamped to [1, n]). Throws EmptySample.
double empirical_quantile(std::span<const double> sample, double tau);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool missing_left = true;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf prediction
  double gain = 0.0;   // squared-error reduction of the split

  [[nodiscard]] bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() : nodes_{TreeNode{}} {}

  [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& nodes() { return nodes_; }

  // Node ids in the order their splits were made.
  [[nodiscard]] const std::vector<int>& split_order() const { return split_order_; }
  [[nodiscard]] std::size_t n_splits() const { return split_order_.size(); }

  // Row x goes left when x[feature] < threshold; NaN follows missing_left.
  [[nodiscard]] int leaf_for(std::span<const double> x) const;
  [[nodiscard]] double evaluate(std::span<const double> x) const { return nodes_[leaf_for(x)].value; }

  // Sum of split gains per feature.
  [[nodiscard]] std::vector<double> feature_gains(std::size_t n_features) const;

  int split_leaf(int leaf, int feature, double threshold, bool missing_left, double gain);

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<int> split_order_;
};

// Best-first growth on the in-bag rows: repeatedly split the leaf whose best
// axis-aligned split removes the most squared error of `targets`, until
// `depth` splits are made or no admissible split remains. Thresholds sit at
// midpoints of adjacent distinct values; both children need >= min_node rows.
// Ties (within 1e-9 of the node's sum of squares) keep the lower feature,
// then the lower threshold, then the earlier-created leaf. Leaf values are
// the in-bag target means.
RegressionTree fit_regression_tree(const Matrix& X, std::span<const double> targets, const std::vector<bool>& in_bag,
                                   int depth, int min_node);

// Replaces each leaf value with the tau-quantile of y - f_current over the
// in-bag rows reaching it; leaves that receive no in-bag rows get 0.
RegressionTree terminal_quantile_update(RegressionTree tree, const Matrix& X, std::span<const double> y,
                                        std::span<const double> f_current, double tau,
                                        const std::vector<bool>& in_bag);

struct BoostedModel {
  double init = 0.0;
  std::vector<RegressionTree> trees;
  TrainConfig config;
  std::vector<std::string> predictor_names;
  std::optional<int> best_iteration;

  [[nodiscard]] std::size_t n_features() const { return predictor_names.size(); }
};

struct LossCurve {
  std::vector<double> train_loss;
  std::vector<double> test_loss;  // empty without a test design
  int best_iteration = 0;         // 1-based
};

struct BoostResult {
  BoostedModel model;
  LossCurve curve;
  std::vector<std::string> warnings;
};

// Stagewise quantile boosting. Training loss is tracked on every training row,
// test loss on the test design when given; best_iteration is the first
// minimiser of the test loss (n_trees without a test design, with a warning).
// Throws SingleIterationStall when the first tree already fits the in-bag rows
// exactly while the training data are not fit exactly.
BoostResult boost(const station::DesignMatrix& design, const TrainConfig& config,
                  const station::DesignMatrix* test_design = nullptr);

// init + shrinkage * sum of the first n_trees trees (default: best_iteration,
// else every tree). Throws ShapeMismatch.
std::vector<double> predict(const BoostedModel& model, const Matrix& X, std::optional<int> n_trees = std::nullopt);
double predict_row(const BoostedModel& model, std::span<const double> x, std::optional<int> n_trees = std::nullopt);

struct InfluenceReport {
  std::vector<std::string> names;
  std::vector<double> influence;  // mean squared-error reduction per tree
  std::vector<double> percent;    // sums to 100
};

// Throws ZeroInfluence when none of the first n_trees trees has a split.
InfluenceReport relative_influence(const BoostedModel& model, std::optional<int> n_trees = std::nullopt);

struct PdpGrid {
  std::string feature;
  std::vector<double> grid;
  std::vector<double> values;
  std::size_t n_background = 0;
};

// Average prediction over every background row with `feature` overwritten by
// each grid point; grid points are equally spaced quantiles (linear
// interpolation) of the background feature. Throws UnknownFeature.
PdpGrid partial_dependence(const BoostedModel& model, const Matrix& background, std::string_view feature,
                           int grid_size, std::optional<int> n_trees = std::nullopt);

// Versioned JSON text. Loading reproduces predictions bit for bit.
std::string save_model(const BoostedModel& model);
BoostedModel load_model(std::string_view text);

void write_loss_curve_csv(std::ostream& out, const LossCurve& curve);

}  // namespace heatcast::qgbm
