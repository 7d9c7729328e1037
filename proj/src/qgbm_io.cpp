#include <cmath>

#include "heatcast/csv.hpp"
#include "heatcast/error.hpp"
#include "heatcast/qgbm.hpp"
#include "json.hpp"

namespace heatcast::qgbm {

namespace {

constexpr const char* kFormat = "heatcast-qgbm";
constexpr int kVersion = 1;

using nlohmann::json;

json tree_to_json(const RegressionTree& tree) {
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"leaf", n.value}});
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"missing_left", n.missing_left},
                       {"left", n.left},
                       {"right", n.right},
                       {"gain", n.gain}});
    }
  }
  return {{"nodes", nodes}, {"split_order", tree.split_order()}};
}

RegressionTree tree_from_json(const json& j) {
  // Rebuild through split_leaf so split_order and child ids are re-derived
  // and checked against the stored ones.
  const json& nodes = j.at("nodes");
  RegressionTree tree;
  for (int id : j.at("split_order").get<std::vector<int>>()) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) throw Error(ErrorCode::ParseError, "bad split id");
    const json& n = nodes[static_cast<std::size_t>(id)];
    const int left = tree.split_leaf(id, n.at("feature").get<int>(), n.at("threshold").get<double>(),
                                     n.at("missing_left").get<bool>(), n.at("gain").get<double>());
    if (left != n.at("left").get<int>() || left + 1 != n.at("right").get<int>()) {
      throw Error(ErrorCode::ParseError, "tree node layout is inconsistent");
    }
  }
  if (tree.nodes().size() != nodes.size()) throw Error(ErrorCode::ParseError, "tree node count mismatch");
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (tree.nodes()[id].is_leaf()) tree.nodes()[id].value = nodes[id].at("leaf").get<double>();
  }
  return tree;
}

}  // namespace

std::string save_model(const BoostedModel& model) {
  const TrainConfig& c = model.config;
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = {{"tau", c.tau},
                 {"n_trees", c.n_trees},
                 {"shrinkage", c.shrinkage},
                 {"interaction_depth", c.interaction_depth},
                 {"bag_fraction", c.bag_fraction},
                 {"min_node", c.min_node},
                 {"seed", c.seed}};
  j["init"] = model.init;
  j["predictor_names"] = model.predictor_names;
  j["best_iteration"] = model.best_iteration ? json(*model.best_iteration) : json(nullptr);
  json influence = json::array();
  json trees = json::array();
  for (const auto& t : model.trees) {
    trees.push_back(tree_to_json(t));
    influence.push_back(t.feature_gains(model.n_features()));
  }
  j["influence_accumulators"] = influence;
  j["trees"] = trees;
  return j.dump(1) + "\n";
}

BoostedModel load_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw Error(ErrorCode::ParseError, "not a heatcast model");
    const int version = j.at("version").get<int>();
    if (version != kVersion) throw Error(ErrorCode::ParseError, "unsupported model version " + std::to_string(version));
    BoostedModel model;
    const json& c = j.at("config");
    model.config.tau = c.at("tau").get<double>();
    model.config.n_trees = c.at("n_trees").get<int>();
    model.config.shrinkage = c.at("shrinkage").get<double>();
    model.config.interaction_depth = c.at("interaction_depth").get<int>();
    model.config.bag_fraction = c.at("bag_fraction").get<double>();
    model.config.min_node = c.at("min_node").get<int>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.validate();
    model.init = j.at("init").get<double>();
    model.predictor_names = j.at("predictor_names").get<std::vector<std::string>>();
    if (!j.at("best_iteration").is_null()) model.best_iteration = j.at("best_iteration").get<int>();
    for (const auto& t : j.at("trees")) model.trees.push_back(tree_from_json(t));
    const std::size_t p = model.n_features();
    for (const auto& t : model.trees) {
      for (int id : t.split_order()) {
        const int f = t.nodes()[static_cast<std::size_t>(id)].feature;
        if (f < 0 || static_cast<std::size_t>(f) >= p) throw Error(ErrorCode::ParseError, "split feature out of range");
      }
    }
    if (model.best_iteration && (*model.best_iteration < 0 ||
                                 static_cast<std::size_t>(*model.best_iteration) > model.trees.size())) {
      throw Error(ErrorCode::ParseError, "best_iteration exceeds tree count");
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
  }
}

void write_loss_curve_csv(std::ostream& out, const LossCurve& curve) {
  csv::write_row(out, {"iteration", "train_loss", "test_loss"});
  for (std::size_t i = 0; i < curve.train_loss.size(); ++i) {
    csv::write_row(out, {std::to_string(i + 1), csv::format_double(curve.train_loss[i]),
                         i < curve.test_loss.size() ? csv::format_double(curve.test_loss[i]) : "NA"});
  }
}

}  // namespace heatcast::qgbm
