#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace heatcast::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitDataError = 2,
  kExitNetwork = 3,
  kExitStall = 4,
};

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct FetchOptions {
  std::string station;  // USAF-WBAN, e.g. "071560-99999"
  std::vector<int> years;
  std::filesystem::path out_dir;
  std::string base_url = "https://www.ncei.noaa.gov/data/global-hourly/access";
  int timeout_seconds = 60;
};

struct FetchOutcome {
  int year = 0;
  std::filesystem::path path;
  std::string sha256;
  bool unchanged = false;  // existing file matched its recorded checksum
};

// Downloads <base_url>/<year>/<USAFWBAN>.csv for each year into
// <out_dir>/<year>/ with a .sha256 sidecar. Throws NetworkError or
// UnknownStation; nothing is written for a failed year.
std::vector<FetchOutcome> fetch_station_years(const FetchOptions& options);

std::string isd_file_name(const std::string& station);

}  // namespace heatcast::cli
