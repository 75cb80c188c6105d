#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "voldens/deconv.hpp"
#include "voldens/models.hpp"

//! Plain-text I/O: numeric CSV with a header row, and flat `key = value`
//! config files. Numbers are serialized with 17 significant digits so that
//! write/read round-trips are bit exact.
namespace voldens::io {

//! Command-line / flag misuse; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Unreadable, unwritable or malformed input; maps to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);

struct Csv {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

Csv read_csv(const std::string& path);
std::size_t column_index(const Csv& csv, const std::string& name);

//! Writes `t,x,sigma_sq`, one row per time step after burn-in.
void write_sim_csv(const std::string& path, const models::SimOutput& sim);

//! Writes `x,fhat` (p = 1), `x,y,fhat` (p = 2) or `x,y,z,fhat` (p = 3,
//! row-major flattening).
void write_estimate_csv(const std::string& path, const deconv::EstimateGrid& est);

//! One `key = value` per line, `#` comments, blank lines ignored.
struct KeyValueConfig {
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  std::vector<Entry> entries;
  std::string path;

  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;  //!< throws DataError
};

KeyValueConfig parse_config_file(const std::string& path);

double parse_double(const std::string& text, const std::string& context);
long long parse_int(const std::string& text, const std::string& context);
std::vector<double> parse_double_list(const std::string& text, const std::string& context);

}  // namespace voldens::io
