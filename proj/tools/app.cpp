#include "app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "checksum.hpp"
#include "heatcast/conformal.hpp"
#include "heatcast/csv.hpp"
#include "heatcast/error.hpp"
#include "heatcast/qgbm.hpp"
#include "heatcast/random.hpp"
#include "heatcast/station_data.hpp"
#include "heatcast/stats.hpp"
#include "heatcast/synth.hpp"
#include "json.hpp"
#include "svg.hpp"

namespace heatcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

struct Manifest {
  std::string command;
  std::string config;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  json extra = json::object();
};

std::string utc_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return format_timestamp(Timestamp{now}) + "Z";
}

json file_entries(const std::vector<fs::path>& paths) {
  json list = json::array();
  for (const auto& p : paths) list.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
  return list;
}

// Timestamps appear only here so every other output is reproducible.
void write_manifest(const fs::path& path, const Manifest& m) {
  json j;
  j["command"] = m.command;
  j["version"] = HEATCAST_VERSION;
  j["rng"] = Rng::kIdentity;
  j["config"] = m.config;
  j["inputs"] = file_entries(m.inputs);
  j["outputs"] = file_entries(m.outputs);
  j["created_utc"] = utc_now();
  if (!m.extra.empty()) j["details"] = m.extra;
  write_file(path, j.dump(2) + "\n");
}

std::string to_csv(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

station::DesignMatrix load_design(const fs::path& path) { return station::read_design_csv(read_file(path)); }

json missingness_json(const station::MissingnessReport& r) {
  json cols = json::array();
  for (const auto& c : r.columns) cols.push_back({{"name", c.name}, {"missing", c.missing}, {"fraction", c.fraction}});
  return {{"n_rows", r.n_rows}, {"columns", cols}, {"dropped_columns", r.dropped_columns},
          {"imputed_cells", r.imputed_cells}};
}

std::vector<double> day_index(const std::vector<Date>& dates) {
  std::vector<double> x;
  for (const auto& d : dates) x.push_back(static_cast<double>((d - dates.front()).count()));
  return x;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  fs::path out;
  synth::SynthConfig config;
  std::string start = "2018-01-01";
  std::vector<std::string> effects;
  std::vector<std::string> all_missing;
};

synth::Effect parse_effect(const std::string& text) {
  // field:shape:magnitude[:lag]
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4) {
    throw Error(ErrorCode::InvalidArgument, "effect must be field:shape:magnitude[:lag], got " + text);
  }
  synth::Effect e;
  auto field = station::field_from_name(parts[0]);
  if (!field) throw Error(ErrorCode::InvalidArgument, "unknown field " + parts[0]);
  e.predictor = *field;
  if (parts[1] == "linear") {
    e.shape = synth::EffectShape::Linear;
  } else if (parts[1] == "step") {
    e.shape = synth::EffectShape::Step;
  } else if (parts[1] == "flat") {
    e.shape = synth::EffectShape::Flat;
  } else {
    throw Error(ErrorCode::InvalidArgument, "effect shape must be linear, step or flat");
  }
  auto mag = csv::parse_double(parts[2]);
  if (!mag) throw Error(ErrorCode::InvalidArgument, "bad effect magnitude " + parts[2]);
  e.magnitude = *mag;
  if (parts.size() == 4) e.lag_days = std::stoi(parts[3]);
  return e;
}

int cmd_synth(SynthArgs& a, const std::string& config_echo, std::ostream& out) {
  auto start = parse_date(a.start);
  if (!start) throw Error(ErrorCode::InvalidArgument, "bad --start date " + a.start);
  a.config.start = *start;
  for (const auto& e : a.effects) a.config.effects.push_back(parse_effect(e));
  for (const auto& f : a.all_missing) {
    auto field = station::field_from_name(f);
    if (!field) throw Error(ErrorCode::InvalidArgument, "unknown field " + f);
    a.config.all_missing.push_back(*field);
  }
  const auto station = synth::generate_synthetic_station(a.config);
  write_file(a.out, to_csv([&](std::ostream& o) { station::write_hourly_csv(o, station.hours, station.longitude); }));
  write_manifest(a.out.string() + ".manifest.json", {"synth", config_echo, {}, {a.out}});
  out << "wrote " << station.hours.size() << " hourly records to " << a.out.generic_string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fetch

int cmd_fetch(FetchOptions& o, const std::string& config_echo, std::ostream& out) {
  const auto outcomes = fetch_station_years(o);
  Manifest m{"fetch", config_echo, {}, {}};
  json files = json::array();
  for (const auto& f : outcomes) {
    m.outputs.push_back(f.path);
    files.push_back({{"year", f.year}, {"path", f.path.generic_string()}, {"unchanged", f.unchanged}});
    out << f.year << ": " << f.path.generic_string() << " sha256=" << f.sha256
        << (f.unchanged ? " (unchanged, not re-downloaded)" : "") << "\n";
  }
  m.extra["files"] = files;
  write_manifest(o.out_dir / "manifest_fetch.json", m);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// curate

struct CurateArgs {
  std::vector<fs::path> inputs;
  std::string format = "auto";
  fs::path schema_path;
  std::optional<double> longitude;
  double solar_hour = 14.0;
  int tolerance = 90;
  unsigned start_month = 3;
  unsigned end_month = 8;
  std::optional<unsigned> response_start_month;
  int lag_days = 14;
  std::string response = "air_temp";
  std::vector<int> years;
  fs::path out_dir;
};

int cmd_curate(const CurateArgs& a, const std::string& config_echo, std::ostream& out, std::ostream& err) {
  const auto response = station::response_from_name(a.response);
  if (!response) throw Error(ErrorCode::InvalidArgument, "unknown response " + a.response);
  const station::Schema schema =
      a.schema_path.empty() ? station::Schema::defaults() : station::Schema::parse(read_file(a.schema_path));

  std::vector<station::HourlyRecord> hours;
  std::optional<double> longitude = a.longitude;
  for (const auto& path : a.inputs) {
    const std::string text = read_file(path);
    const std::string header = text.substr(0, text.find('\n'));
    const bool isd = a.format == "isd" ||
                     (a.format == "auto" && header.find("\"WND\"") != std::string::npos) ||
                     (a.format == "auto" && header.find(",WND,") != std::string::npos);
    auto parsed = isd ? station::parse_isd_global_hourly(text) : station::parse_hourly_records(text, schema);
    if (parsed.skipped_rows) err << path.generic_string() << ": skipped " << parsed.skipped_rows << " rows\n";
    if (!longitude) longitude = parsed.longitude;
    hours.insert(hours.end(), parsed.records.begin(), parsed.records.end());
  }
  if (!longitude) throw Error(ErrorCode::InvalidArgument, "station longitude unknown; pass --longitude");
  std::stable_sort(hours.begin(), hours.end(),
                   [](const auto& x, const auto& y) { return x.timestamp_utc < y.timestamp_utc; });
  hours.erase(std::unique(hours.begin(), hours.end(),
                          [](const auto& x, const auto& y) { return x.timestamp_utc == y.timestamp_utc; }),
              hours.end());

  const auto snap = station::extract_daily_snapshot(hours, *longitude, a.solar_hour, a.tolerance);
  std::vector<int> years = a.years;
  const bool explicit_years = !years.empty();
  if (!explicit_years) {
    std::set<int> seen;
    for (const auto& d : snap.days) seen.insert(year_of(d.date));
    years.assign(seen.begin(), seen.end());
  }

  station::DesignOptions opts;
  opts.response_start_month =
      a.response_start_month ? a.response_start_month
                             : (a.start_month < a.end_month ? std::optional<unsigned>(a.start_month + 1) : std::nullopt);

  Manifest m{"curate", config_echo, a.inputs, {}};
  m.extra["longitude"] = *longitude;
  m.extra["days_omitted_tolerance"] = snap.omitted_days;
  for (int year : years) {
    const auto window = station::window_months(station::filter_year(snap.days, year), a.start_month, a.end_month);
    station::DesignResult built;
    try {
      built = station::build_lagged_design(window, a.lag_days, *response, {station::kAllFields.begin(),
                                                                           station::kAllFields.end()},
                                           opts);
    } catch (const Error& e) {
      if (explicit_years || e.code() != ErrorCode::DegenerateDesign) throw;
      err << "year " << year << " skipped: " << e.what() << "\n";
      continue;
    }
    const fs::path design_path = a.out_dir / ("design_" + std::to_string(year) + ".csv");
    const fs::path miss_path = a.out_dir / ("missingness_" + std::to_string(year) + ".json");
    write_file(design_path, to_csv([&](std::ostream& o) { station::write_design_csv(o, built.design); }));
    json mj = missingness_json(built.report);
    mj["year"] = year;
    mj["response"] = built.design.response_name;
    mj["lag_days"] = a.lag_days;
    write_file(miss_path, mj.dump(2) + "\n");
    m.outputs.push_back(design_path);
    m.outputs.push_back(miss_path);
    out << "year " << year << ": N=" << built.design.n() << " p=" << built.design.p();
    if (!built.report.dropped_columns.empty()) {
      out << " dropped=";
      for (std::size_t i = 0; i < built.report.dropped_columns.size(); ++i) {
        out << (i ? "," : "") << built.report.dropped_columns[i];
      }
    }
    out << " imputed=" << built.report.imputed_cells << " -> " << design_path.generic_string() << "\n";
  }
  if (m.outputs.empty()) throw Error(ErrorCode::DegenerateDesign, "no year produced a usable design");
  write_manifest(a.out_dir / "manifest_curate.json", m);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  fs::path train;
  fs::path test;
  qgbm::TrainConfig config;
  std::string method = "symmetric";
  double alpha = 0.30;
  fs::path out_dir;
};

int cmd_train(const TrainArgs& a, const std::string& config_echo, std::ostream& out, std::ostream& err) {
  const auto method = conformal::method_from_name(a.method);
  if (!method) throw Error(ErrorCode::InvalidArgument, "method must be symmetric or cqr");
  const auto train = load_design(a.train);
  std::optional<station::DesignMatrix> test;
  if (!a.test.empty()) {
    test = load_design(a.test);
    if (test->year == train.year) {
      throw Error(ErrorCode::InvalidArgument, "training and test designs come from the same year");
    }
    if (std::abs(test->year - train.year) != 1) {
      err << "warning: training year " << train.year << " and test year " << test->year << " are not adjacent\n";
    }
  }
  Manifest m{"train", config_echo, {a.train}, {}};
  if (test) m.inputs.push_back(a.test);

  auto fit_one = [&](const qgbm::TrainConfig& cfg, const std::string& suffix) {
    const auto result = qgbm::boost(train, cfg, test ? &*test : nullptr);
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    const fs::path model_path = a.out_dir / ("model" + suffix + ".json");
    const fs::path curve_path = a.out_dir / ("loss_curve" + suffix + ".csv");
    write_file(model_path, qgbm::save_model(result.model));
    write_file(curve_path, to_csv([&](std::ostream& o) { qgbm::write_loss_curve_csv(o, result.curve); }));
    m.outputs.push_back(model_path);
    m.outputs.push_back(curve_path);
    const std::size_t best = static_cast<std::size_t>(result.curve.best_iteration);
    json record = {{"tau", cfg.tau},
                   {"n_trees", cfg.n_trees},
                   {"best_iteration", best},
                   {"train_year", train.year},
                   {"train_loss_at_best", result.curve.train_loss[best - 1]},
                   {"warnings", result.warnings}};
    if (test) {
      record["test_year"] = test->year;
      record["test_loss_at_best"] = result.curve.test_loss[best - 1];
    }
    out << "tau=" << cfg.tau << " trees=" << cfg.n_trees << " best_iteration=" << best << " -> "
        << model_path.generic_string() << "\n";
    return record;
  };

  json summary;
  summary["main"] = fit_one(a.config, "");
  if (*method == conformal::Method::Cqr) {
    qgbm::TrainConfig lo = a.config, hi = a.config;
    lo.tau = a.alpha / 2.0;
    hi.tau = 1.0 - a.alpha / 2.0;
    summary["lower"] = fit_one(lo, "_lo");
    summary["upper"] = fit_one(hi, "_hi");
  }
  const fs::path summary_path = a.out_dir / "training.json";
  write_file(summary_path, summary.dump(2) + "\n");
  m.outputs.push_back(summary_path);
  write_manifest(a.out_dir / "manifest_train.json", m);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  fs::path model_dir;
  fs::path train;
  fs::path test;
  int grid_size = 20;
  int bins = 20;
  double span = 0.75;
  bool svg = false;
  fs::path out_dir;
};

int cmd_report(const ReportArgs& a, const std::string& config_echo, std::ostream& out) {
  const fs::path model_path = a.model_dir / "model.json";
  const auto model = qgbm::load_model(read_file(model_path));
  const auto train = load_design(a.train);
  if (train.predictor_names != model.predictor_names) {
    throw Error(ErrorCode::ShapeMismatch, "design predictors differ from the model's");
  }
  Manifest m{"report", config_echo, {model_path, a.train}, {}};
  auto emit = [&](const std::string& name, const std::string& contents) {
    const fs::path p = a.out_dir / name;
    write_file(p, contents);
    m.outputs.push_back(p);
  };
  const std::string tau_label = "Q(" + csv::format_fixed(model.config.tau, 2) + ")";

  // Relative influence, largest first.
  const auto infl = qgbm::relative_influence(model);
  std::vector<std::size_t> order(infl.names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return infl.percent[x] > infl.percent[y]; });
  emit("influence.csv", to_csv([&](std::ostream& o) {
         csv::write_row(o, {"predictor", "influence", "percent"});
         for (auto j : order) {
           csv::write_row(o, {infl.names[j], csv::format_double(infl.influence[j]), csv::format_double(infl.percent[j])});
         }
       }));

  // Partial dependence for every predictor.
  std::vector<qgbm::PdpGrid> pdps;
  for (const auto& name : model.predictor_names) {
    pdps.push_back(qgbm::partial_dependence(model, train.X, name, a.grid_size));
    const auto& pdp = pdps.back();
    emit("pdp_" + name + ".csv", to_csv([&](std::ostream& o) {
           csv::write_row(o, {"x", "value"});
           for (std::size_t g = 0; g < pdp.grid.size(); ++g) {
             csv::write_row(o, {csv::format_double(pdp.grid[g]), csv::format_double(pdp.values[g])});
           }
         }));
  }

  // Fitted quantiles against observed values, with a smoother of fitted on observed.
  const auto fitted = qgbm::predict(model, train.X);
  const auto fit_smooth = stats::loess_smooth(train.y, fitted, a.span);
  emit("fitted_vs_observed.csv", to_csv([&](std::ostream& o) {
         csv::write_row(o, {"date", "observed", "fitted", "smoothed", "lower_band", "upper_band"});
         for (std::size_t i = 0; i < train.n(); ++i) {
           csv::write_row(o, {format_date(train.dates[i]), csv::format_double(train.y[i]),
                              csv::format_double(fitted[i]), csv::format_double(fit_smooth.fitted[i]),
                              csv::format_double(fit_smooth.lower_band[i]),
                              csv::format_double(fit_smooth.upper_band[i])});
         }
       }));

  // Time series: observed, fitted and a smoother of observed over time.
  const auto t = day_index(train.dates);
  const auto ts_smooth = stats::loess_smooth(t, train.y, a.span);
  emit("timeseries.csv", to_csv([&](std::ostream& o) {
         csv::write_row(o, {"date", "observed", "fitted", "smoothed", "lower_band", "upper_band"});
         for (std::size_t i = 0; i < train.n(); ++i) {
           csv::write_row(o, {format_date(train.dates[i]), csv::format_double(train.y[i]),
                              csv::format_double(fitted[i]), csv::format_double(ts_smooth.fitted[i]),
                              csv::format_double(ts_smooth.lower_band[i]),
                              csv::format_double(ts_smooth.upper_band[i])});
         }
       }));

  // Histogram of the response with a GEV overlay when the fit converges.
  std::optional<stats::GevFit> gev;
  json gev_json = {{"converged", false}};
  try {
    gev = stats::fit_gev(train.y);
    gev_json = {{"location", gev->location},   {"scale", gev->scale},
                {"shape", gev->shape},         {"log_likelihood", gev->log_likelihood},
                {"converged", gev->converged}, {"iterations", gev->iterations}};
  } catch (const Error& e) {
    gev_json["error"] = e.what();
  }
  const auto hist = stats::histogram(train.y, static_cast<std::size_t>(a.bins));
  emit("histogram_gev.csv", to_csv([&](std::ostream& o) { stats::write_histogram_csv(o, hist, gev); }));

  const auto obs_summary = stats::summarize_distribution(train.y);
  const auto fit_summary = stats::summarize_distribution(fitted);
  auto summary_json = [](const stats::Summary& s) {
    return json{{"n", s.n},       {"min", s.min},
                {"max", s.max},   {"mean", s.mean},
                {"sd", s.sd},     {"probabilities", s.probabilities},
                {"quantiles", s.quantiles}};
  };
  json summary = {{"observed", summary_json(obs_summary)},
                  {"fitted", summary_json(fit_summary)},
                  {"gev", gev_json},
                  {"band_caveat", "2 SE bands assume independent, homoscedastic errors"}};
  if (!a.test.empty()) {
    const auto test = load_design(a.test);
    m.inputs.push_back(a.test);
    const auto test_fit = qgbm::predict(model, test.X);
    summary["test"] = {{"year", test.year},
                       {"mean_quantile_loss", qgbm::mean_quantile_loss(test.y, test_fit, model.config.tau)},
                       {"observed", summary_json(stats::summarize_distribution(test.y))}};
  }
  emit("summary.json", summary.dump(2) + "\n");

  if (a.svg) {
    using svg::Chart;
    using svg::Series;
    using svg::Style;
    {
      Chart c{"Relative influence", "", "percent", {}, {}};
      Series s{"", {}, {}, Style::Bars, "steelblue"};
      for (std::size_t k = 0; k < order.size(); ++k) {
        s.x.push_back(static_cast<double>(k));
        s.y.push_back(infl.percent[order[k]]);
        c.categories.push_back(infl.names[order[k]]);
      }
      c.series.push_back(s);
      emit("influence.svg", svg::render(c));
    }
    for (const auto& pdp : pdps) {
      Chart c{"Partial dependence: " + pdp.feature, pdp.feature, tau_label, {}, {}};
      c.series.push_back(Series{"", pdp.grid, pdp.values, Style::Line, "black"});
      emit("pdp_" + pdp.feature + ".svg", svg::render(c));
    }
    {
      Chart c{"Fitted vs observed", "observed", "fitted " + tau_label, {}, {}};
      c.series.push_back(Series{"fitted", train.y, fitted, Style::Points, "red"});
      std::vector<std::size_t> idx(train.n());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return train.y[x] < train.y[y]; });
      Series sm{"loess", {}, {}, Style::Line, "blue"}, lo{"", {}, {}, Style::Line, "gray"},
          hi{"", {}, {}, Style::Line, "gray"};
      for (auto i : idx) {
        sm.x.push_back(train.y[i]);
        sm.y.push_back(fit_smooth.fitted[i]);
        lo.x.push_back(train.y[i]);
        lo.y.push_back(fit_smooth.lower_band[i]);
        hi.x.push_back(train.y[i]);
        hi.y.push_back(fit_smooth.upper_band[i]);
      }
      c.series.push_back(lo);
      c.series.push_back(hi);
      c.series.push_back(sm);
      emit("fitted_vs_observed.svg", svg::render(c));
    }
    {
      Chart c{"Observed and fitted by day", "days since " + format_date(train.dates.front()), "deg C", {}, {}};
      c.series.push_back(Series{"observed", t, train.y, Style::Points, "black"});
      c.series.push_back(Series{"fitted " + tau_label, t, fitted, Style::Points, "red"});
      c.series.push_back(Series{"loess", t, ts_smooth.fitted, Style::Line, "blue"});
      emit("timeseries.svg", svg::render(c));
    }
    {
      Chart c{"Histogram", "deg C", "density", {}, {}};
      Series bars{"", {}, {}, Style::Line, "gray"};
      Series overlay{"GEV", {}, {}, Style::Line, "red"};
      for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        bars.x.push_back(hist.edges[b]);
        bars.y.push_back(hist.density(b));
        bars.x.push_back(hist.edges[b + 1]);
        bars.y.push_back(hist.density(b));
        if (gev && gev->converged) {
          overlay.x.push_back(hist.midpoint(b));
          overlay.y.push_back(stats::gev_density(*gev, hist.midpoint(b)));
        }
      }
      c.series.push_back(bars);
      if (!overlay.x.empty()) c.series.push_back(overlay);
      emit("histogram_gev.svg", svg::render(c));
    }
  }

  write_manifest(a.out_dir / "manifest_report.json", m);
  out << "report written to " << a.out_dir.generic_string() << " (" << m.outputs.size() << " files)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// forecast

struct ForecastArgs {
  fs::path model_dir;
  fs::path calibration;
  fs::path new_design;
  std::string method = "symmetric";
  double alpha = 0.30;
  std::optional<double> threshold;
  std::size_t sample = 0;
  std::size_t top_k = 10;
  std::uint64_t seed = 1;
  fs::path out_dir;
};

int cmd_forecast(const ForecastArgs& a, const std::string& config_echo, std::ostream& out, std::ostream& err) {
  const auto method = conformal::method_from_name(a.method);
  if (!method) throw Error(ErrorCode::InvalidArgument, "method must be symmetric or cqr");
  const auto calib = load_design(a.calibration);
  const auto fresh = load_design(a.new_design);
  Manifest m{"forecast", config_echo, {a.calibration, a.new_design}, {}};

  std::vector<std::size_t> rows;
  if (a.sample > 0 && a.sample < fresh.n()) {
    Rng rng(a.seed);
    const auto mask = rng.subsample_mask(fresh.n(), a.sample);
    for (std::size_t i = 0; i < fresh.n(); ++i) {
      if (mask[i]) rows.push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < fresh.n(); ++i) rows.push_back(i);
  }

  std::vector<conformal::PredictionRegion> regions;
  json calibration_json;
  if (*method == conformal::Method::Symmetric) {
    const fs::path model_path = a.model_dir / "model.json";
    m.inputs.push_back(model_path);
    const auto model = qgbm::load_model(read_file(model_path));
    const auto sc = conformal::calibrate_symmetric(calib.y, qgbm::predict(model, calib.X), a.alpha);
    if (!sc.ar1.stationary()) err << "warning: AR(1) coefficient " << sc.ar1.phi << " is non-stationary\n";
    if (!sc.innovation_acf.white) err << "warning: whitened residuals fail the per-lag white-noise check\n";
    calibration_json = {{"q_hat", sc.calibration.q_hat},
                        {"index", sc.calibration.index},
                        {"n_scores", sc.calibration.scores.size()},
                        {"ar1_phi", sc.ar1.phi},
                        {"ar1_intercept", sc.ar1.intercept},
                        {"raw_acf", sc.raw_acf.rho},
                        {"innovation_acf", sc.innovation_acf.rho},
                        {"acf_band", sc.innovation_acf.band},
                        {"innovations_white", sc.innovation_acf.white}};
    for (std::size_t i : rows) {
      const double f = qgbm::predict_row(model, fresh.X.row(i));
      regions.push_back(conformal::symmetric_region(f, sc.calibration, fresh.dates[i]));
    }
  } else {
    const fs::path lo_path = a.model_dir / "model_lo.json", hi_path = a.model_dir / "model_hi.json";
    m.inputs.push_back(lo_path);
    m.inputs.push_back(hi_path);
    const auto lo = qgbm::load_model(read_file(lo_path));
    const auto hi = qgbm::load_model(read_file(hi_path));
    const auto cal = conformal::calibrate_cqr(lo, hi, calib.X, calib.y, a.alpha);
    calibration_json = {{"q_hat", cal.q_hat}, {"index", cal.index}, {"n_scores", cal.scores.size()}};
    std::size_t crossed = 0;
    for (std::size_t i : rows) {
      regions.push_back(conformal::cqr_region(lo, hi, cal, fresh.X.row(i), fresh.dates[i]));
      crossed += regions.back().crossed ? 1 : 0;
    }
    if (crossed) err << "warning: " << crossed << " days had crossed quantile forecasts (bounds swapped)\n";
    calibration_json["crossed_quantiles"] = crossed;
  }
  calibration_json["method"] = conformal::method_name(*method);
  calibration_json["alpha"] = a.alpha;
  calibration_json["calibration_year"] = calib.year;
  calibration_json["caveat"] =
      "coverage is guaranteed only for exchangeable scores; with serially dependent data it holds approximately";

  const fs::path regions_path = a.out_dir / "regions.csv";
  write_file(regions_path, to_csv([&](std::ostream& o) { conformal::write_regions_csv(o, regions, a.threshold); }));
  const fs::path calib_path = a.out_dir / "calibration.json";
  write_file(calib_path, calibration_json.dump(2) + "\n");
  m.outputs = {regions_path, calib_path};

  std::vector<conformal::PredictionRegion> observed_regions;
  std::vector<double> observed;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double y = fresh.y[rows[k]];
    if (std::isnan(y)) continue;
    observed_regions.push_back(regions[k]);
    observed.push_back(y);
  }
  std::size_t alerts = 0;
  if (a.threshold) {
    for (const auto& r : regions) alerts += conformal::threshold_alert(r, *a.threshold) ? 1 : 0;
  }
  out << regions.size() << " regions -> " << regions_path.generic_string();
  if (a.threshold) out << " (" << alerts << " alerts at " << *a.threshold << " C)";
  out << "\n";
  if (!observed.empty()) {
    const auto rep = conformal::coverage_report(observed_regions, observed, a.top_k);
    const json cj = {{"n_regions", rep.n_regions},
                     {"n_covered", rep.n_covered},
                     {"empirical_coverage", rep.empirical_coverage},
                     {"k", rep.k},
                     {"top_k_covered", rep.top_k_covered},
                     {"mean_half_width", rep.mean_half_width},
                     {"min_half_width", rep.min_half_width},
                     {"max_half_width", rep.max_half_width},
                     {"nominal_coverage", 1.0 - a.alpha}};
    const fs::path cov_path = a.out_dir / "coverage.json";
    write_file(cov_path, cj.dump(2) + "\n");
    m.outputs.push_back(cov_path);
    out << "coverage " << rep.n_covered << "/" << rep.n_regions << " = " << rep.empirical_coverage << "; top "
        << rep.k << " covered " << rep.top_k_covered << "; half-width mean " << rep.mean_half_width << "\n";
  }
  write_manifest(a.out_dir / "manifest_forecast.json", m);
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NetworkError:
    case ErrorCode::UnknownStation: return kExitNetwork;
    case ErrorCode::SingleIterationStall: return kExitStall;
    default: return kExitDataError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"heatcast: two-week-ahead extreme heat forecasting with quantile boosting and conformal regions"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "write a seeded synthetic hourly station file");
  synth->add_option("--out", synth_args.out, "output CSV")->required();
  synth->add_option("--seed", synth_args.config.seed);
  synth->add_option("--days", synth_args.config.n_days);
  synth->add_option("--start", synth_args.start, "first day, YYYY-MM-DD");
  synth->add_option("--base-temp", synth_args.config.base_temp);
  synth->add_option("--seasonal-amplitude", synth_args.config.seasonal_amplitude);
  synth->add_option("--phi", synth_args.config.ar1_phi, "AR(1) coefficient of the residual process");
  synth->add_option("--noise-sd", synth_args.config.noise_sd);
  synth->add_option("--diurnal-amplitude", synth_args.config.diurnal_amplitude);
  synth->add_option("--longitude", synth_args.config.longitude);
  synth->add_option("--effect", synth_args.effects, "field:linear|step|flat:magnitude[:lag]");
  synth->add_option("--all-missing", synth_args.all_missing, "field emitted entirely missing");
  synth->add_option("--missing-fraction", synth_args.config.missing_fraction);

  FetchOptions fetch_args;
  auto* fetch = app.add_subcommand("fetch", "download hourly archive files for a station");
  fetch->add_option("--station", fetch_args.station, "USAF-WBAN id, e.g. 071560-99999")->required();
  fetch->add_option("--year", fetch_args.years)->required();
  fetch->add_option("--out", fetch_args.out_dir)->required();
  fetch->add_option("--base-url", fetch_args.base_url);
  fetch->add_option("--timeout", fetch_args.timeout_seconds);

  CurateArgs curate_args;
  auto* curate = app.add_subcommand("curate", "build lagged design files from hourly station data");
  curate->add_option("--input", curate_args.inputs, "hourly file(s)")->required()->check(CLI::ExistingFile);
  curate->add_option("--format", curate_args.format)->check(CLI::IsMember({"auto", "delimited", "isd"}));
  curate->add_option("--schema", curate_args.schema_path, "key=value column map")->check(CLI::ExistingFile);
  curate->add_option("--longitude", curate_args.longitude);
  curate->add_option("--solar-hour", curate_args.solar_hour);
  curate->add_option("--tolerance", curate_args.tolerance, "minutes");
  curate->add_option("--start-month", curate_args.start_month);
  curate->add_option("--end-month", curate_args.end_month);
  curate->add_option("--response-start-month", curate_args.response_start_month);
  curate->add_option("--lag-days", curate_args.lag_days);
  curate->add_option("--response", curate_args.response)
      ->check(CLI::IsMember({"air_temp", "heat_index", "heat_index_rh", "heat_index_dp"}));
  curate->add_option("--year", curate_args.years);
  curate->add_option("--out", curate_args.out_dir)->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "fit a quantile boosting model");
  train->add_option("--train", train_args.train, "training design CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--test", train_args.test, "test design CSV (early stopping)")->check(CLI::ExistingFile);
  train->add_option("--tau", train_args.config.tau);
  train->add_option("--trees", train_args.config.n_trees);
  train->add_option("--shrinkage", train_args.config.shrinkage);
  train->add_option("--depth", train_args.config.interaction_depth);
  train->add_option("--bag-fraction", train_args.config.bag_fraction);
  train->add_option("--min-node", train_args.config.min_node);
  train->add_option("--seed", train_args.config.seed);
  train->add_option("--method", train_args.method, "symmetric|cqr (cqr also fits the two bound models)");
  train->add_option("--alpha", train_args.alpha);
  train->add_option("--out", train_args.out_dir)->required();

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "influence, partial dependence, fit and distribution data files");
  report->add_option("--model-dir", report_args.model_dir)->required()->check(CLI::ExistingDirectory);
  report->add_option("--train", report_args.train)->required()->check(CLI::ExistingFile);
  report->add_option("--test", report_args.test)->check(CLI::ExistingFile);
  report->add_option("--grid-size", report_args.grid_size);
  report->add_option("--bins", report_args.bins);
  report->add_option("--span", report_args.span);
  report->add_flag("--svg", report_args.svg, "also render SVG figures");
  report->add_option("--out", report_args.out_dir)->required();

  ForecastArgs forecast_args;
  auto* forecast = app.add_subcommand("forecast", "conformal prediction regions and threshold alerts");
  forecast->add_option("--model-dir", forecast_args.model_dir)->required()->check(CLI::ExistingDirectory);
  forecast->add_option("--calibration", forecast_args.calibration)->required()->check(CLI::ExistingFile);
  forecast->add_option("--new", forecast_args.new_design)->required()->check(CLI::ExistingFile);
  forecast->add_option("--method", forecast_args.method);
  forecast->add_option("--alpha", forecast_args.alpha);
  forecast->add_option("--threshold", forecast_args.threshold, "risk threshold, deg C");
  forecast->add_option("--sample", forecast_args.sample, "forecast a seeded random sample of this many days");
  forecast->add_option("--top-k", forecast_args.top_k);
  forecast->add_option("--seed", forecast_args.seed);
  forecast->add_option("--out", forecast_args.out_dir)->required();

  std::vector<std::string> argv_storage{"heatcast"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  auto* chosen = app.get_subcommands().front();
  const std::string config_echo = chosen->config_to_str(true, false);
  try {
    if (chosen == synth) return cmd_synth(synth_args, config_echo, out);
    if (chosen == fetch) return cmd_fetch(fetch_args, config_echo, out);
    if (chosen == curate) return cmd_curate(curate_args, config_echo, out, err);
    if (chosen == train) return cmd_train(train_args, config_echo, out, err);
    if (chosen == report) return cmd_report(report_args, config_echo, out);
    if (chosen == forecast) return cmd_forecast(forecast_args, config_echo, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace heatcast::cli
