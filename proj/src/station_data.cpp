#include "heatcast/station_data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "heatcast/csv.hpp"
#include "heatcast/error.hpp"
#include "heatcast/heat_index.hpp"

namespace heatcast::station {

namespace {

constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "wind_dir", "wind_speed", "air_temp", "sea_level_pressure", "visibility", "dew_point", "rel_humidity",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Range checks applied after parsing; offending values become missing.
bool in_range(Field f, double& v) {
  switch (f) {
    case Field::WindDir:
      if (v == 360.0) v = 0.0;
      return v >= 0.0 && v < 360.0;
    case Field::RelHumidity: return v >= 0.0 && v <= 100.0;
    case Field::WindSpeed:
    case Field::Visibility: return v >= 0.0;
    default: return std::isfinite(v);
  }
}

// Sort by time and collapse duplicate timestamps, keeping the record with
// fewer missing fields (earliest parse order on ties).
void sort_and_dedup(ParseResult& result) {
  auto& recs = result.records;
  std::stable_sort(recs.begin(), recs.end(),
                   [](const HourlyRecord& a, const HourlyRecord& b) { return a.timestamp_utc < b.timestamp_utc; });
  std::vector<HourlyRecord> unique;
  unique.reserve(recs.size());
  for (auto& r : recs) {
    if (!unique.empty() && unique.back().timestamp_utc == r.timestamp_utc) {
      ++result.duplicate_timestamps;
      if (r.values.missing_count() < unique.back().values.missing_count()) unique.back() = r;
      continue;
    }
    unique.push_back(r);
  }
  recs = std::move(unique);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string_view field_name(Field f) { return kFieldNames[static_cast<std::size_t>(f)]; }

std::optional<Field> field_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (kFieldNames[i] == name) return static_cast<Field>(i);
  }
  return std::nullopt;
}

Schema Schema::defaults() {
  Schema s;
  s.columns = {
      {"timestamp", "date"},          {"wind_dir", "wd"},
      {"wind_speed", "ws"},           {"air_temp", "air_temp"},
      {"sea_level_pressure", "atmos_pres"}, {"visibility", "visibility"},
      {"dew_point", "dew_point"},     {"rel_humidity", "RH"},
      {"longitude", "longitude"},
  };
  s.optional_fields = {"longitude"};
  return s;
}

Schema Schema::parse(std::string_view text) {
  Schema s = defaults();
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "schema line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(trim(l.substr(0, eq)));
    const std::string value(trim(l.substr(eq + 1)));
    if (key == "missing") {
      s.missing_sentinels.clear();
      std::size_t start = 0;
      while (start <= value.size()) {
        auto comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        s.missing_sentinels.emplace_back(trim(std::string_view(value).substr(start, comma - start)));
        start = comma + 1;
      }
      continue;
    }
    if (key != "timestamp" && key != "longitude" && !field_from_name(key)) {
      throw Error(ErrorCode::ParseError, "schema line " + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
    if (value.empty()) {
      s.columns.erase(key);
    } else {
      s.columns[key] = value;
    }
  }
  if (!s.columns.count("timestamp")) throw Error(ErrorCode::ParseError, "schema must map timestamp");
  return s;
}

ParseResult parse_hourly_records(std::string_view raw_text, const Schema& schema) {
  const csv::Table table = csv::parse(raw_text);
  if (table.header.empty()) throw Error(ErrorCode::EmptyInput, "no header row");

  auto locate = [&](const std::string& logical) -> std::optional<std::size_t> {
    auto it = schema.columns.find(logical);
    if (it == schema.columns.end()) return std::nullopt;
    auto idx = table.column(it->second);
    if (!idx && !schema.optional_fields.count(logical)) {
      throw Error(ErrorCode::MissingColumn, it->second + " (for " + logical + ")");
    }
    return idx;
  };
  const auto ts_col = locate("timestamp");
  if (!ts_col) throw Error(ErrorCode::MissingColumn, "timestamp");
  const auto lon_col = locate("longitude");
  std::array<std::optional<std::size_t>, kFieldCount> cols;
  for (Field f : kAllFields) cols[static_cast<std::size_t>(f)] = locate(std::string(field_name(f)));

  auto is_sentinel = [&](std::string_view cell) {
    cell = trim(cell);
    return std::any_of(schema.missing_sentinels.begin(), schema.missing_sentinels.end(),
                       [&](const std::string& s) { return cell == s; });
  };

  std::vector<double> numeric_sentinels;
  for (const auto& s : schema.missing_sentinels) {
    if (auto v = csv::parse_double(s)) numeric_sentinels.push_back(*v);
  }

  ParseResult result;
  for (const auto& row : table.rows) {
    auto cell = [&](std::size_t c) -> std::string_view { return c < row.size() ? std::string_view(row[c]) : ""; };
    auto ts = parse_timestamp(trim(cell(*ts_col)));
    if (!ts) {
      ++result.skipped_rows;
      continue;
    }
    HourlyRecord rec{*ts, {}};
    for (Field f : kAllFields) {
      const auto& c = cols[static_cast<std::size_t>(f)];
      if (!c || is_sentinel(cell(*c))) continue;
      auto v = csv::parse_double(cell(*c));
      if (!v || std::find(numeric_sentinels.begin(), numeric_sentinels.end(), *v) != numeric_sentinels.end()) {
        continue;
      }
      double value = *v;
      if (!in_range(f, value)) {
        ++result.out_of_range_values;
        continue;
      }
      rec.values[f] = value;
    }
    if (lon_col && !result.longitude && !is_sentinel(cell(*lon_col))) {
      result.longitude = csv::parse_double(cell(*lon_col));
    }
    result.records.push_back(rec);
  }
  if (result.records.empty()) throw Error(ErrorCode::EmptyInput, "no rows with a parseable timestamp");
  sort_and_dedup(result);
  return result;
}

namespace {

// Splits an ISD compound field such as "+0089,1" or "999,9,V,0010,1".
std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto comma = s.find(',', start);
    parts.push_back(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

bool isd_quality_ok(std::string_view q) {
  // 2/6 suspect, 3/7 erroneous.
  return !(q == "2" || q == "3" || q == "6" || q == "7");
}

std::optional<double> isd_scaled(std::string_view value, std::string_view quality, std::string_view missing,
                                 double scale) {
  if (value == missing || !isd_quality_ok(quality)) return std::nullopt;
  auto v = csv::parse_double(value);
  if (!v) return std::nullopt;
  return *v / scale;
}

}  // namespace

ParseResult parse_isd_global_hourly(std::string_view raw_text) {
  const csv::Table table = csv::parse(raw_text, csv::Delimiter::Comma);
  auto need = [&](std::string_view name) {
    auto idx = table.column(name);
    if (!idx) throw Error(ErrorCode::MissingColumn, std::string(name));
    return *idx;
  };
  if (table.header.empty()) throw Error(ErrorCode::EmptyInput, "no header row");
  const std::size_t date_c = need("DATE"), wnd_c = need("WND"), vis_c = need("VIS"), tmp_c = need("TMP"),
                    dew_c = need("DEW"), slp_c = need("SLP");
  const auto lon_c = table.column("LONGITUDE");
  const auto type_c = table.column("REPORT_TYPE");

  ParseResult result;
  for (const auto& row : table.rows) {
    auto cell = [&](std::size_t c) -> std::string_view { return c < row.size() ? trim(row[c]) : ""; };
    if (type_c) {
      const auto type = cell(*type_c);
      if (type == "SOD" || type == "SOM") continue;  // daily/monthly summaries
    }
    auto ts = parse_timestamp(cell(date_c));
    if (!ts) {
      ++result.skipped_rows;
      continue;
    }
    HourlyRecord rec{*ts, {}};
    const auto wnd = split_commas(cell(wnd_c));
    if (wnd.size() >= 5) {
      if (auto d = isd_scaled(wnd[0], wnd[1], "999", 1.0)) {
        double v = *d;
        if (in_range(Field::WindDir, v)) rec.values[Field::WindDir] = v;
      }
      if (auto s = isd_scaled(wnd[3], wnd[4], "9999", 10.0)) rec.values[Field::WindSpeed] = *s;
    }
    const auto vis = split_commas(cell(vis_c));
    if (vis.size() >= 2) {
      if (auto v = isd_scaled(vis[0], vis[1], "999999", 1.0)) rec.values[Field::Visibility] = *v;
    }
    const auto tmp = split_commas(cell(tmp_c));
    if (tmp.size() >= 2) {
      if (auto v = isd_scaled(tmp[0], tmp[1], "+9999", 10.0)) rec.values[Field::AirTemp] = *v;
    }
    const auto dew = split_commas(cell(dew_c));
    if (dew.size() >= 2) {
      if (auto v = isd_scaled(dew[0], dew[1], "+9999", 10.0)) rec.values[Field::DewPoint] = *v;
    }
    const auto slp = split_commas(cell(slp_c));
    if (slp.size() >= 2) {
      if (auto v = isd_scaled(slp[0], slp[1], "99999", 10.0)) rec.values[Field::SeaLevelPressure] = *v;
    }
    const double t = rec.values[Field::AirTemp], td = rec.values[Field::DewPoint];
    if (!std::isnan(t) && !std::isnan(td)) {
      try {
        rec.values[Field::RelHumidity] = heat_index::relative_humidity_from_dew_point(t, td);
      } catch (const Error&) {
        ++result.out_of_range_values;
      }
    }
    if (lon_c && !result.longitude) result.longitude = csv::parse_double(cell(*lon_c));
    result.records.push_back(rec);
  }
  if (result.records.empty()) throw Error(ErrorCode::EmptyInput, "no rows with a parseable timestamp");
  sort_and_dedup(result);
  return result;
}

void write_hourly_csv(std::ostream& out, const std::vector<HourlyRecord>& records, double longitude) {
  const Schema schema = Schema::defaults();
  std::vector<std::string> header{schema.columns.at("timestamp"), schema.columns.at("longitude")};
  for (Field f : kAllFields) header.push_back(schema.columns.at(std::string(field_name(f))));
  csv::write_row(out, header);
  const std::string lon = csv::format_double(longitude);
  for (const auto& r : records) {
    std::vector<std::string> row{format_timestamp(r.timestamp_utc), lon};
    for (Field f : kAllFields) {
      const double v = r.values[f];
      row.push_back(std::isnan(v) ? schema.missing_sentinels.front() : csv::format_double(v));
    }
    csv::write_row(out, row);
  }
}

SnapshotResult extract_daily_snapshot(const std::vector<HourlyRecord>& hours, double longitude,
                                      double target_solar_hour, int tolerance_minutes) {
  if (!(target_solar_hour >= 0.0 && target_solar_hour < 24.0)) {
    throw Error(ErrorCode::InvalidArgument, "target_solar_hour must lie in [0, 24)");
  }
  struct Best {
    std::size_t index;
    double offset_minutes;
  };
  std::map<Date, Best> best;
  const double target_seconds = target_solar_hour * 3600.0;
  const double solar_shift_seconds = longitude * 240.0;  // longitude / 15 hours
  for (std::size_t i = 0; i < hours.size(); ++i) {
    const auto ts = hours[i].timestamp_utc;
    const auto utc_day = std::chrono::floor<std::chrono::days>(ts);
    const double seconds_in_day = static_cast<double>((ts - utc_day).count());
    const double rel = seconds_in_day + solar_shift_seconds - target_seconds;
    const double k = std::round(rel / 86400.0);
    const Date solar_date = utc_day + std::chrono::days{static_cast<long>(k)};
    const double offset = (rel - k * 86400.0) / 60.0;
    auto [it, inserted] = best.try_emplace(solar_date, Best{i, offset});
    if (!inserted && std::fabs(offset) < std::fabs(it->second.offset_minutes)) it->second = Best{i, offset};
  }
  SnapshotResult result;
  for (const auto& [date, b] : best) {
    if (std::fabs(b.offset_minutes) > tolerance_minutes) {
      ++result.omitted_days;
      continue;
    }
    const auto& rec = hours[b.index];
    result.days.push_back(DailyRecord{date, longitude, rec.values, rec.timestamp_utc, b.offset_minutes});
  }
  return result;
}

std::vector<DailyRecord> window_months(const std::vector<DailyRecord>& days, unsigned start_month,
                                       unsigned end_month) {
  if (!(start_month >= 1 && start_month <= end_month && end_month <= 12)) {
    throw Error(ErrorCode::InvalidArgument, "month window must satisfy 1 <= start <= end <= 12");
  }
  std::vector<DailyRecord> out;
  std::copy_if(days.begin(), days.end(), std::back_inserter(out), [&](const DailyRecord& d) {
    const unsigned m = month_of(d.date);
    return m >= start_month && m <= end_month;
  });
  return out;
}

std::vector<DailyRecord> filter_year(const std::vector<DailyRecord>& days, int year) {
  std::vector<DailyRecord> out;
  std::copy_if(days.begin(), days.end(), std::back_inserter(out),
               [&](const DailyRecord& d) { return year_of(d.date) == year; });
  return out;
}

std::string_view response_name(Response r) {
  switch (r) {
    case Response::AirTemp: return "air_temp";
    case Response::HeatIndexRh: return "heat_index_rh";
    case Response::HeatIndexDp: return "heat_index_dp";
  }
  return "air_temp";
}

std::optional<Response> response_from_name(std::string_view name) {
  if (name == "air_temp") return Response::AirTemp;
  if (name == "heat_index_rh" || name == "heat_index") return Response::HeatIndexRh;
  if (name == "heat_index_dp") return Response::HeatIndexDp;
  return std::nullopt;
}

double response_value(const DailyRecord& day, Response r) {
  const double t = day.values[Field::AirTemp];
  switch (r) {
    case Response::AirTemp: return t;
    case Response::HeatIndexRh: {
      const double rh = day.values[Field::RelHumidity];
      if (std::isnan(t) || std::isnan(rh)) return kMissing;
      return heat_index::steadman_heat_index(t, rh);
    }
    case Response::HeatIndexDp: {
      const double td = day.values[Field::DewPoint];
      if (std::isnan(t) || std::isnan(td)) return kMissing;
      try {
        return heat_index::heat_index_dew_point_variant(t, td);
      } catch (const Error&) {
        return kMissing;
      }
    }
  }
  return kMissing;
}

DesignResult build_lagged_design(const std::vector<DailyRecord>& days, int lag_days, Response response,
                                 const std::vector<Field>& predictors, const DesignOptions& options) {
  if (lag_days < 0) throw Error(ErrorCode::InvalidArgument, "lag_days must be non-negative");
  if (predictors.empty() || predictors.size() > kFieldCount) {
    throw Error(ErrorCode::InvalidArgument, "between 1 and 7 predictors required");
  }
  std::map<Date, const DailyRecord*> by_date;
  for (const auto& d : days) by_date.try_emplace(d.date, &d);  // first record wins on duplicate dates

  const std::size_t p_all = predictors.size();
  std::vector<Date> dates;
  std::vector<double> y;
  std::vector<std::array<double, kFieldCount>> raw;
  for (const auto& [date, rec] : by_date) {
    if (options.response_start_month) {
      const std::chrono::year_month_day ymd{date};
      const Date first_allowed{ymd.year() / std::chrono::month{*options.response_start_month} / 1};
      if (date < first_allowed) continue;
    }
    auto lagged = by_date.find(date - std::chrono::days{lag_days});
    if (lagged == by_date.end()) continue;
    const double yv = response_value(*rec, response);
    if (std::isnan(yv)) continue;
    dates.push_back(date);
    y.push_back(yv);
    std::array<double, kFieldCount> row{};
    for (std::size_t j = 0; j < p_all; ++j) row[j] = lagged->second->values[predictors[j]];
    raw.push_back(row);
  }
  const std::size_t n = dates.size();
  if (n < options.min_rows) {
    throw Error(ErrorCode::DegenerateDesign,
                std::to_string(n) + " usable rows; at least " + std::to_string(options.min_rows) + " required");
  }

  MissingnessReport report;
  report.n_rows = n;
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < p_all; ++j) {
    std::size_t miss = 0;
    for (const auto& row : raw) miss += std::isnan(row[j]) ? 1 : 0;
    const std::string name(field_name(predictors[j]));
    report.columns.push_back({name, miss, static_cast<double>(miss) / static_cast<double>(n)});
    if (miss == n) {
      report.dropped_columns.push_back(name);
    } else {
      kept.push_back(j);
    }
  }

  DesignResult result;
  auto& design = result.design;
  design.response_name = std::string(response_name(response));
  design.dates = std::move(dates);
  design.y = std::move(y);
  design.lag_days = lag_days;
  design.year = year_of(design.dates.front());
  design.dropped_predictors = report.dropped_columns;
  for (std::size_t j : kept) design.predictor_names.emplace_back(field_name(predictors[j]));
  const std::size_t p = kept.size();
  design.X = Matrix(n, p);
  design.missing_mask.assign(n * p, 0);
  for (std::size_t c = 0; c < p; ++c) {
    const std::size_t j = kept[c];
    std::vector<double> observed;
    for (const auto& row : raw) {
      if (!std::isnan(row[j])) observed.push_back(row[j]);
    }
    const double median = median_of(observed);
    double last = kMissing;
    for (std::size_t i = 0; i < n; ++i) {
      double v = raw[i][j];
      if (std::isnan(v)) {
        design.missing_mask[i * p + c] = 1;
        v = std::isnan(last) ? median : last;
        ++report.imputed_cells;
      } else {
        last = v;
      }
      design.X(i, c) = v;
    }
  }
  result.report = std::move(report);
  return result;
}

MissingnessReport audit_missing(const DesignMatrix& design) {
  MissingnessReport report;
  const std::size_t n = design.n(), p = design.p();
  report.n_rows = n;
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t miss = 0;
    if (!design.missing_mask.empty()) {
      for (std::size_t i = 0; i < n; ++i) miss += design.missing(i, c) ? 1 : 0;
    }
    report.columns.push_back({design.predictor_names[c], miss, n ? static_cast<double>(miss) / n : 0.0});
    report.imputed_cells += miss;
  }
  for (const auto& name : design.dropped_predictors) {
    report.columns.push_back({name, n, 1.0});
    report.dropped_columns.push_back(name);
  }
  return report;
}

void write_design_csv(std::ostream& out, const DesignMatrix& design) {
  std::vector<std::string> header{"date", "y"};
  header.insert(header.end(), design.predictor_names.begin(), design.predictor_names.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < design.n(); ++i) {
    std::vector<std::string> row{format_date(design.dates[i]), csv::format_double(design.y[i])};
    for (double v : design.X.row(i)) row.push_back(csv::format_double(v));
    csv::write_row(out, row);
  }
}

DesignMatrix read_design_csv(std::string_view text) {
  const csv::Table table = csv::parse(text, csv::Delimiter::Comma);
  const auto date_c = table.column("date");
  if (!date_c) throw Error(ErrorCode::MissingColumn, "date");
  const auto y_c = table.column("y");
  DesignMatrix design;
  design.response_name = "y";
  std::vector<std::size_t> pred_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *date_c || (y_c && c == *y_c)) continue;
    pred_cols.push_back(c);
    design.predictor_names.push_back(table.header[c]);
  }
  design.X = Matrix(0, pred_cols.size());
  std::vector<double> row(pred_cols.size());
  for (const auto& r : table.rows) {
    auto date = parse_date(r.at(*date_c));
    if (!date) throw Error(ErrorCode::ParseError, "bad date '" + r.at(*date_c) + "'");
    design.dates.push_back(*date);
    design.y.push_back(y_c && *y_c < r.size() ? csv::parse_double(r[*y_c]).value_or(kMissing) : kMissing);
    for (std::size_t k = 0; k < pred_cols.size(); ++k) {
      row[k] = pred_cols[k] < r.size() ? csv::parse_double(r[pred_cols[k]]).value_or(kMissing) : kMissing;
    }
    design.X.append_row(row);
  }
  if (design.dates.empty()) throw Error(ErrorCode::EmptyInput, "design file has no rows");
  design.year = year_of(design.dates.front());
  design.missing_mask.assign(design.n() * design.p(), 0);
  return design;
}

}  // namespace heatcast::station
