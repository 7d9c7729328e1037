#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "heatcast/calendar.hpp"
#include "heatcast/matrix.hpp"

namespace heatcast::station {

// The seven routinely reported weather fields, in the predictor order used
// throughout (wind direction first, relative humidity last).
enum class Field : std::uint8_t {
  WindDir = 0,
  WindSpeed,
  AirTemp,
  SeaLevelPressure,
  Visibility,
  DewPoint,
  RelHumidity,
};

inline constexpr std::size_t kFieldCount = 7;
inline constexpr std::array<Field, kFieldCount> kAllFields = {
    Field::WindDir,    Field::WindSpeed, Field::AirTemp,     Field::SeaLevelPressure,
    Field::Visibility, Field::DewPoint,  Field::RelHumidity,
};

std::string_view field_name(Field f);
std::optional<Field> field_from_name(std::string_view name);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct WeatherValues {
  std::array<double, kFieldCount> values{kMissing, kMissing, kMissing, kMissing, kMissing, kMissing, kMissing};

  double& operator[](Field f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Field f) const { return values[static_cast<std::size_t>(f)]; }

  [[nodiscard]] std::size_t missing_count() const {
    std::size_t n = 0;
    for (double v : values) n += std::isnan(v) ? 1 : 0;
    return n;
  }
};

struct HourlyRecord {
  Timestamp timestamp_utc;
  WeatherValues values;
};

struct DailyRecord {
  Date date;  // solar date
  double station_longitude = 0.0;
  WeatherValues values;
  Timestamp source_time;
  double source_hour_offset_minutes = 0.0;  // chosen record's solar time minus target
};

// Logical field -> column name mapping for delimited exports.
struct Schema {
  std::map<std::string, std::string> columns;
  std::set<std::string> optional_fields;  // mapped but allowed to be absent
  std::vector<std::string> missing_sentinels{"-9999", ""};

  // Columns written by `heatcast synth` and produced by common hourly
  // export tools: date, ws, wd, air_temp, atmos_pres, visibility,
  // dew_point, RH, plus an optional longitude column.
  static Schema defaults();

  // Plain key=value text. Logical keys: timestamp, longitude and the seven
  // field names; "missing" takes a comma-separated sentinel list. Keys not
  // given keep their default mapping; "field=" (empty) unmaps a field.
  static Schema parse(std::string_view text);
};

struct ParseResult {
  std::vector<HourlyRecord> records;  // sorted by timestamp, unique
  std::size_t skipped_rows = 0;       // unparseable timestamps
  std::size_t duplicate_timestamps = 0;
  std::size_t out_of_range_values = 0;
  std::optional<double> longitude;
};

// Throws MissingColumn for mapped columns absent from the header and
// EmptyInput when no row yields a record.
ParseResult parse_hourly_records(std::string_view raw_text, const Schema& schema = Schema::defaults());

// Reader for the NOAA global-hourly archive CSV (DATE, LONGITUDE, WND, VIS,
// TMP, DEW, SLP compound fields). Relative humidity is derived from
// temperature and dew point.
ParseResult parse_isd_global_hourly(std::string_view raw_text);

void write_hourly_csv(std::ostream& out, const std::vector<HourlyRecord>& records, double longitude);

struct SnapshotResult {
  std::vector<DailyRecord> days;
  std::size_t omitted_days = 0;  // nearest record farther than the tolerance
};

// One record per mean-solar-time date (UTC + longitude/15 h), chosen as the
// hourly record closest to target_solar_hour. Ties go to the earlier record.
SnapshotResult extract_daily_snapshot(const std::vector<HourlyRecord>& hours, double longitude,
                                      double target_solar_hour = 14.0, int tolerance_minutes = 90);

std::vector<DailyRecord> window_months(const std::vector<DailyRecord>& days, unsigned start_month,
                                       unsigned end_month);

std::vector<DailyRecord> filter_year(const std::vector<DailyRecord>& days, int year);

enum class Response { AirTemp, HeatIndexRh, HeatIndexDp };

std::string_view response_name(Response r);
std::optional<Response> response_from_name(std::string_view name);

// Daily response value, NaN when an input is missing.
double response_value(const DailyRecord& day, Response r);

struct ColumnMissing {
  std::string name;
  std::size_t missing = 0;
  double fraction = 0.0;
};

struct MissingnessReport {
  std::size_t n_rows = 0;
  std::vector<ColumnMissing> columns;  // every requested predictor, pre-drop
  std::vector<std::string> dropped_columns;
  std::size_t imputed_cells = 0;
};

struct DesignMatrix {
  std::string response_name;
  std::vector<Date> dates;
  std::vector<double> y;
  Matrix X;
  std::vector<std::string> predictor_names;
  int lag_days = 0;
  int year = 0;
  std::vector<std::uint8_t> missing_mask;  // rows x predictors, before imputation
  std::vector<std::string> dropped_predictors;

  [[nodiscard]] std::size_t n() const { return y.size(); }
  [[nodiscard]] std::size_t p() const { return predictor_names.size(); }
  [[nodiscard]] bool missing(std::size_t row, std::size_t col) const { return missing_mask[row * p() + col] != 0; }
};

struct DesignOptions {
  // Responses are restricted to dates on or after the first day of this
  // month (same year as the response). With a March-August window this is
  // April: March only feeds the lagged predictors.
  std::optional<unsigned> response_start_month;
  std::size_t min_rows = 30;
};

struct DesignResult {
  DesignMatrix design;
  MissingnessReport report;
};

// Rows are the days whose date - lag_days has a record and whose response is
// observed. All-missing predictor columns are dropped; remaining gaps are
// filled by last observation carried forward, else the column median.
// Throws DegenerateDesign when fewer than options.min_rows rows remain.
DesignResult build_lagged_design(const std::vector<DailyRecord>& days, int lag_days, Response response,
                                 const std::vector<Field>& predictors = {kAllFields.begin(), kAllFields.end()},
                                 const DesignOptions& options = {});

MissingnessReport audit_missing(const DesignMatrix& design);

// date, y, predictors... with 17 significant digits.
void write_design_csv(std::ostream& out, const DesignMatrix& design);

// Inverse of write_design_csv. A missing or empty y column yields NaN
// responses. missing_mask is empty-initialised (all observed).
DesignMatrix read_design_csv(std::string_view text);

}  // namespace heatcast::station
