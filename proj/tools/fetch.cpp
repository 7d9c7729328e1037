#include "httplib.h"

#include <algorithm>

#include "app.hpp"
#include "checksum.hpp"
#include "heatcast/error.hpp"

namespace heatcast::cli {

namespace fs = std::filesystem;

std::string isd_file_name(const std::string& station) {
  std::string id;
  for (char c : station) {
    if (std::isalnum(static_cast<unsigned char>(c))) id.push_back(c);
  }
  if (id.size() != 11) throw Error(ErrorCode::UnknownStation, "station id must be USAF-WBAN (6+5 characters): " + station);
  return id + ".csv";
}

std::vector<FetchOutcome> fetch_station_years(const FetchOptions& options) {
  const std::string file_name = isd_file_name(options.station);
  // Split "scheme://host[:port]/path" into client address and path prefix.
  const auto scheme_end = options.base_url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "base URL needs a scheme");
  const auto path_start = options.base_url.find('/', scheme_end + 3);
  const std::string host = options.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : options.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(host);
  client.set_connection_timeout(options.timeout_seconds, 0);
  client.set_read_timeout(options.timeout_seconds, 0);
  client.set_follow_location(true);

  std::vector<FetchOutcome> outcomes;
  for (int year : options.years) {
    FetchOutcome outcome;
    outcome.year = year;
    outcome.path = options.out_dir / std::to_string(year) / file_name;
    const fs::path sidecar = outcome.path.string() + ".sha256";
    if (fs::exists(outcome.path) && fs::exists(sidecar)) {
      std::string recorded = read_file(sidecar);
      recorded = recorded.substr(0, recorded.find_first_of(" \n"));
      const std::string actual = sha256_file(outcome.path);
      if (recorded == actual) {
        outcome.sha256 = actual;
        outcome.unchanged = true;
        outcomes.push_back(outcome);
        continue;
      }
    }
    const std::string url_path = prefix + "/" + std::to_string(year) + "/" + file_name;
    auto response = client.Get(url_path);
    if (!response) {
      throw Error(ErrorCode::NetworkError,
                  "GET " + host + url_path + " failed: " + httplib::to_string(response.error()));
    }
    if (response->status == 404) {
      throw Error(ErrorCode::UnknownStation, options.station + " has no archive for " + std::to_string(year));
    }
    if (response->status != 200) {
      throw Error(ErrorCode::NetworkError, "GET " + host + url_path + " returned HTTP " +
                                               std::to_string(response->status));
    }
    outcome.sha256 = sha256_hex(response->body);
    write_file(outcome.path, response->body);
    write_file(sidecar, outcome.sha256 + "  " + file_name + "\n");
    outcomes.push_back(outcome);
  }
  return outcomes;
}

}  // namespace heatcast::cli
