#include "heatcast/qgbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "heatcast/error.hpp"
#include "heatcast/numeric.hpp"
#include "heatcast/random.hpp"

namespace heatcast::qgbm {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(tau > 0.0 && tau < 1.0)) fail("tau must lie in (0, 1)");
  if (n_trees < 1) fail("n_trees must be positive");
  if (!(shrinkage > 0.0) || !std::isfinite(shrinkage)) fail("shrinkage must be positive");
  if (interaction_depth < 1) fail("interaction_depth must be at least 1");
  if (!(bag_fraction > 0.0 && bag_fraction <= 1.0)) fail("bag_fraction must lie in (0, 1]");
  if (min_node < 1) fail("min_node must be at least 1");
}

double quantile_loss(double y, double yhat, double tau) {
  return y >= yhat ? tau * (y - yhat) : (1.0 - tau) * (yhat - y);
}

double negative_gradient(double y, double yhat, double tau) { return y >= yhat ? tau : tau - 1.0; }

double mean_quantile_loss(std::span<const double> y, std::span<const double> yhat, double tau) {
  if (y.size() != yhat.size()) throw Error(ErrorCode::LengthMismatch, "loss inputs differ in length");
  if (y.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += quantile_loss(y[i], yhat[i], tau);
  return total / static_cast<double>(y.size());
}

double empirical_quantile(std::span<const double> sample, double tau) {
  if (sample.empty()) throw Error(ErrorCode::EmptySample, "empirical_quantile of an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  const std::size_t n = sorted.size();
  // Guard against n*tau landing a hair above an integer through rounding.
  const double pos = std::ceil(static_cast<double>(n) * tau - 1e-9);
  const auto k = static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(n)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

int RegressionTree::leaf_for(std::span<const double> x) const {
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& node = nodes_[id];
    const double v = x[static_cast<std::size_t>(node.feature)];
    const bool go_left = std::isnan(v) ? node.missing_left : v < node.threshold;
    id = go_left ? node.left : node.right;
  }
  return id;
}

std::vector<double> RegressionTree::feature_gains(std::size_t n_features) const {
  std::vector<double> gains(n_features, 0.0);
  for (int id : split_order_) gains[static_cast<std::size_t>(nodes_[id].feature)] += nodes_[id].gain;
  return gains;
}

int RegressionTree::split_leaf(int leaf, int feature, double threshold, bool missing_left, double gain) {
  const int left = static_cast<int>(nodes_.size());
  nodes_.push_back(TreeNode{});
  nodes_.push_back(TreeNode{});
  TreeNode& node = nodes_[leaf];
  node.feature = feature;
  node.threshold = threshold;
  node.missing_left = missing_left;
  node.left = left;
  node.right = left + 1;
  node.gain = gain;
  node.value = 0.0;
  split_order_.push_back(leaf);
  return left;
}

namespace {

struct Candidate {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  bool missing_left = true;
};

Candidate best_split(const Matrix& X, std::span<const double> targets, const std::vector<std::size_t>& rows,
                     int min_node) {
  Candidate best;
  const std::size_t m = rows.size();
  const auto min_rows = static_cast<std::size_t>(min_node);
  if (m < 2 * min_rows || m < 2) return best;
  const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                            [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
  // Constant targets: rounding in the mean must not manufacture a split.
  if (!(targets[*lo] < targets[*hi])) return best;
  double mean = 0.0;
  for (std::size_t r : rows) mean += targets[r];
  mean /= static_cast<double>(m);
  double sse = 0.0;
  for (std::size_t r : rows) sse += (targets[r] - mean) * (targets[r] - mean);
  if (!(sse > 0.0)) return best;
  const double tol = 1e-9 * sse;

  std::vector<std::size_t> order(rows);
  for (std::size_t j = 0; j < X.cols(); ++j) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X(a, j) < X(b, j); });
    double left_dev = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      left_dev += targets[order[k]] - mean;
      const double a = X(order[k], j), b = X(order[k + 1], j);
      if (!(a < b)) continue;
      const std::size_t n_left = k + 1, n_right = m - n_left;
      if (n_left < min_rows || n_right < min_rows) continue;
      const double gain = left_dev * left_dev * static_cast<double>(m) /
                          (static_cast<double>(n_left) * static_cast<double>(n_right));
      const bool better = best.valid ? gain > best.gain + tol : gain > tol;
      if (better) {
        best = Candidate{true, static_cast<int>(j), 0.5 * (a + b), gain, n_left >= n_right};
      }
    }
    std::sort(order.begin(), order.end());
  }
  return best;
}

}  // namespace

RegressionTree fit_regression_tree(const Matrix& X, std::span<const double> targets, const std::vector<bool>& in_bag,
                                   int depth, int min_node) {
  if (depth < 1) throw Error(ErrorCode::InvalidArgument, "depth must be at least 1");
  if (targets.size() != X.rows() || in_bag.size() != X.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "targets/in_bag must have one entry per row");
  }
  RegressionTree tree;
  struct LeafState {
    int node;
    std::vector<std::size_t> rows;
    Candidate split;
  };
  std::vector<LeafState> leaves;
  {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < X.rows(); ++i) {
      if (in_bag[i]) rows.push_back(i);
    }
    double mean = 0.0;
    for (std::size_t r : rows) mean += targets[r];
    tree.nodes()[0].value = rows.empty() ? 0.0 : mean / static_cast<double>(rows.size());
    Candidate c = best_split(X, targets, rows, min_node);
    leaves.push_back(LeafState{0, std::move(rows), c});
  }

  for (int made = 0; made < depth; ++made) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].split.valid) continue;
      if (pick == leaves.size() || leaves[i].split.gain > leaves[pick].split.gain) pick = i;
    }
    if (pick == leaves.size()) break;

    LeafState parent = std::move(leaves[pick]);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
    const Candidate& c = parent.split;
    const int left = tree.split_leaf(parent.node, c.feature, c.threshold, c.missing_left, c.gain);
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : parent.rows) {
      (X(r, static_cast<std::size_t>(c.feature)) < c.threshold ? left_rows : right_rows).push_back(r);
    }
    for (auto [node, rows] : {std::pair{left, &left_rows}, std::pair{left + 1, &right_rows}}) {
      double mean = 0.0;
      for (std::size_t r : *rows) mean += targets[r];
      tree.nodes()[node].value = mean / static_cast<double>(rows->size());
      Candidate next = best_split(X, targets, *rows, min_node);
      leaves.push_back(LeafState{node, std::move(*rows), next});
    }
    // Keep candidates in node-creation order so equal gains favour older leaves.
    std::sort(leaves.begin(), leaves.end(), [](const LeafState& a, const LeafState& b) { return a.node < b.node; });
  }
  return tree;
}

RegressionTree terminal_quantile_update(RegressionTree tree, const Matrix& X, std::span<const double> y,
                                        std::span<const double> f_current, double tau,
                                        const std::vector<bool>& in_bag) {
  std::vector<std::vector<double>> residuals(tree.nodes().size());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    if (!in_bag[i]) continue;
    residuals[static_cast<std::size_t>(tree.leaf_for(X.row(i)))].push_back(y[i] - f_current[i]);
  }
  for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
    TreeNode& node = tree.nodes()[id];
    if (!node.is_leaf()) continue;
    node.value = residuals[id].empty() ? 0.0 : empirical_quantile(residuals[id], tau);
  }
  return tree;
}

BoostResult boost(const station::DesignMatrix& design, const TrainConfig& config,
                  const station::DesignMatrix* test_design) {
  config.validate();
  const std::size_t n = design.n();
  if (n == 0) throw Error(ErrorCode::EmptySample, "empty training design");
  if (design.X.rows() != n || design.X.cols() != design.p()) {
    throw Error(ErrorCode::ShapeMismatch, "design matrix shape disagrees with its metadata");
  }
  for (double v : design.X.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "training predictors must be finite");
  }
  if (test_design) {
    if (test_design->predictor_names != design.predictor_names) {
      throw Error(ErrorCode::ShapeMismatch, "test design predictors differ from training predictors");
    }
    if (test_design->X.rows() != test_design->n()) throw Error(ErrorCode::ShapeMismatch, "test design shape");
  }

  BoostResult result;
  BoostedModel& model = result.model;
  model.config = config;
  model.predictor_names = design.predictor_names;
  model.init = empirical_quantile(design.y, config.tau);
  model.trees.reserve(static_cast<std::size_t>(config.n_trees));

  const std::span<const double> y = design.y;
  std::vector<double> fit(n, model.init);
  std::vector<double> test_fit(test_design ? test_design->n() : 0, model.init);
  const double initial_loss = mean_quantile_loss(y, fit, config.tau);

  Rng rng(config.seed);
  const auto bag_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(config.bag_fraction * static_cast<double>(n))));
  std::vector<double> gradient(n, 0.0);
  LossCurve& curve = result.curve;

  for (int m = 1; m <= config.n_trees; ++m) {
    const std::vector<bool> in_bag =
        config.bag_fraction >= 1.0 ? std::vector<bool>(n, true) : rng.subsample_mask(n, bag_count);
    for (std::size_t i = 0; i < n; ++i) gradient[i] = in_bag[i] ? negative_gradient(y[i], fit[i], config.tau) : 0.0;
    RegressionTree tree =
        fit_regression_tree(design.X, gradient, in_bag, config.interaction_depth, config.min_node);
    tree = terminal_quantile_update(std::move(tree), design.X, y, fit, config.tau, in_bag);

    for (std::size_t i = 0; i < n; ++i) fit[i] += config.shrinkage * tree.evaluate(design.X.row(i));
    if (test_design) {
      for (std::size_t i = 0; i < test_fit.size(); ++i) {
        test_fit[i] += config.shrinkage * tree.evaluate(test_design->X.row(i));
      }
    }

    if (m == 1 && initial_loss > 0.0) {
      double in_bag_loss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (in_bag[i]) in_bag_loss += quantile_loss(y[i], fit[i], config.tau);
      }
      if (in_bag_loss == 0.0) {
        throw Error(ErrorCode::SingleIterationStall,
                    "first tree fits every in-bag row exactly; boosting cannot make progress "
                    "(pseudo-residuals carry no signal)");
      }
    }

    model.trees.push_back(std::move(tree));
    curve.train_loss.push_back(mean_quantile_loss(y, fit, config.tau));
    if (test_design) curve.test_loss.push_back(mean_quantile_loss(test_design->y, test_fit, config.tau));
  }

  if (test_design) {
    const auto best = std::min_element(curve.test_loss.begin(), curve.test_loss.end());
    curve.best_iteration = static_cast<int>(best - curve.test_loss.begin()) + 1;
  } else {
    curve.best_iteration = config.n_trees;
    result.warnings.emplace_back("no test design: best_iteration set to n_trees");
  }
  model.best_iteration = curve.best_iteration;
  return result;
}

namespace {

int resolve_tree_count(const BoostedModel& model, std::optional<int> n_trees) {
  const int available = static_cast<int>(model.trees.size());
  const int count = n_trees.value_or(model.best_iteration.value_or(available));
  if (count < 0 || count > available) {
    throw Error(ErrorCode::ShapeMismatch,
                "requested " + std::to_string(count) + " trees; model has " + std::to_string(available));
  }
  return count;
}

}  // namespace

double predict_row(const BoostedModel& model, std::span<const double> x, std::optional<int> n_trees) {
  if (x.size() != model.n_features()) {
    throw Error(ErrorCode::ShapeMismatch, "row has " + std::to_string(x.size()) + " features; model expects " +
                                              std::to_string(model.n_features()));
  }
  const int count = resolve_tree_count(model, n_trees);
  double f = model.init;
  for (int m = 0; m < count; ++m) f += model.config.shrinkage * model.trees[static_cast<std::size_t>(m)].evaluate(x);
  return f;
}

std::vector<double> predict(const BoostedModel& model, const Matrix& X, std::optional<int> n_trees) {
  if (X.cols() != model.n_features()) {
    throw Error(ErrorCode::ShapeMismatch, "matrix has " + std::to_string(X.cols()) + " columns; model expects " +
                                              std::to_string(model.n_features()));
  }
  const int count = resolve_tree_count(model, n_trees);
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_row(model, X.row(i), count);
  return out;
}

InfluenceReport relative_influence(const BoostedModel& model, std::optional<int> n_trees) {
  const int count = resolve_tree_count(model, n_trees);
  const std::size_t p = model.n_features();
  InfluenceReport report;
  report.names = model.predictor_names;
  report.influence.assign(p, 0.0);
  for (int m = 0; m < count; ++m) {
    const auto gains = model.trees[static_cast<std::size_t>(m)].feature_gains(p);
    for (std::size_t j = 0; j < p; ++j) report.influence[j] += gains[j];
  }
  double total = 0.0;
  for (double& v : report.influence) {
    v /= std::max(count, 1);
    total += v;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroInfluence, "no tree in the ensemble contains a split");
  report.percent.resize(p);
  for (std::size_t j = 0; j < p; ++j) report.percent[j] = 100.0 * report.influence[j] / total;
  return report;
}

PdpGrid partial_dependence(const BoostedModel& model, const Matrix& background, std::string_view feature,
                           int grid_size, std::optional<int> n_trees) {
  const auto it = std::find(model.predictor_names.begin(), model.predictor_names.end(), feature);
  if (it == model.predictor_names.end()) throw Error(ErrorCode::UnknownFeature, std::string(feature));
  if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "grid_size must be at least 2");
  if (background.rows() == 0) throw Error(ErrorCode::EmptySample, "empty background data");
  if (background.cols() != model.n_features()) throw Error(ErrorCode::ShapeMismatch, "background column count");
  const auto col = static_cast<std::size_t>(it - model.predictor_names.begin());
  const int count = resolve_tree_count(model, n_trees);

  std::vector<double> values = background.column(col);
  std::sort(values.begin(), values.end());

  PdpGrid pdp;
  pdp.feature = std::string(feature);
  pdp.n_background = background.rows();
  Matrix probe = background;
  for (int g = 0; g < grid_size; ++g) {
    const double x = linear_quantile(values, static_cast<double>(g) / static_cast<double>(grid_size - 1));
    for (std::size_t i = 0; i < probe.rows(); ++i) probe(i, col) = x;
    const auto preds = predict(model, probe, count);
    double sum = 0.0;
    for (double v : preds) sum += v;
    pdp.grid.push_back(x);
    pdp.values.push_back(sum / static_cast<double>(preds.size()));
  }
  return pdp;
}

}  // namespace heatcast::qgbm
