#include "voldens/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace voldens::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  Csv csv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (csv.columns.empty()) {
      for (const auto& c : split(line, ',')) csv.columns.push_back(trim(c));
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != csv.columns.size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(csv.columns.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) {
      row.push_back(parse_double(trim(cell), path + ":" + std::to_string(lineno)));
    }
    csv.rows.push_back(std::move(row));
  }
  if (csv.columns.empty()) throw DataError("empty CSV file: " + path);
  return csv;
}

std::size_t column_index(const Csv& csv, const std::string& name) {
  for (std::size_t i = 0; i < csv.columns.size(); ++i) {
    if (csv.columns[i] == name) return i;
  }
  throw DataError("missing required column '" + name + "'");
}

void write_sim_csv(const std::string& path, const models::SimOutput& sim) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << "t,x,sigma_sq\n";
  for (std::size_t t = 0; t < sim.n; ++t) {
    out << t << ',' << format_double(sim.x[t]) << ',' << format_double(sim.sigma_sq[t]) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_estimate_csv(const std::string& path, const deconv::EstimateGrid& est) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  static const char* kAxisNames[] = {"x", "y", "z"};
  for (int m = 0; m < est.p; ++m) out << kAxisNames[m] << ',';
  out << "fhat\n";
  std::vector<std::size_t> sizes;
  for (const auto& axis : est.axes) sizes.push_back(axis.size());
  for (std::size_t flat = 0; flat < est.values.size(); ++flat) {
    std::size_t rem = flat;
    std::vector<std::size_t> idx(est.p);
    for (int d = est.p; d-- > 0;) {
      idx[d] = rem % sizes[d];
      rem /= sizes[d];
    }
    for (int d = 0; d < est.p; ++d) out << format_double(est.axes[d][idx[d]]) << ',';
    out << format_double(est.values[flat]) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  for (const auto& e : entries) {
    if (e.key == key) return e.value;
  }
  return std::nullopt;
}

std::string KeyValueConfig::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw DataError(path + ": missing required key '" + key + "'");
  return *v;
}

KeyValueConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  KeyValueConfig cfg;
  cfg.path = path;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    KeyValueConfig::Entry e;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.entries.push_back(std::move(e));
  }
  return cfg;
}

double parse_double(const std::string& text, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": not a number: '" + text + "'");
  }
}

long long parse_int(const std::string& text, const std::string& context) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": not an integer: '" + text + "'");
  }
}

std::vector<double> parse_double_list(const std::string& text, const std::string& context) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(parse_double(tok, context));
  }
  if (out.empty()) throw DataError(context + ": empty list");
  return out;
}

}  // namespace voldens::io
