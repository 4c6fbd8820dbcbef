#include "ecc3/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ecc3 {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  if (t.empty()) throw_config(where + ": empty numeric field");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw_config(where + ": cannot parse '" + t + "' as a number");
  }
  if (used != t.size())
    throw_config(where + ": trailing characters in '" + t + "'");
  return v;
}

}  // namespace

std::vector<std::vector<double>> read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    std::vector<double> row;
    for (const std::string& tok : split(stripped, ',')) {
      row.push_back(
          parse_double(tok, path + " row " + std::to_string(lineno)));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw_config(path + " row " + std::to_string(lineno) +
                   ": column count differs from the first row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw_config(path + ": no data rows");
  return rows;
}

std::vector<std::size_t> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open " + path);
  std::vector<std::size_t> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const double v =
        parse_double(stripped, path + " row " + std::to_string(lineno));
    if (v < 0.0 || v != std::floor(v))
      throw_config(path + " row " + std::to_string(lineno) +
                   ": label must be a non-negative integer");
    labels.push_back(static_cast<std::size_t>(v));
  }
  if (labels.empty()) throw_config(path + ": no labels");
  return labels;
}

namespace {

ProbVector row_to_prob(const std::vector<double>& row, const std::string& path,
                       std::size_t rowno) {
  try {
    return ProbVector::from(row);
  } catch (const Error& e) {
    throw_config(path + " row " + std::to_string(rowno) + ": " + e.what());
  }
}

}  // namespace

Dataset ingest(const std::string& probs_path, const std::string& labels_path,
               const std::optional<std::string>& oracle_path) {
  const auto prob_rows = read_csv_matrix(probs_path);
  const auto labels = read_labels(labels_path);
  if (prob_rows.size() != labels.size())
    throw_config("ingest: " + probs_path + " has " +
                 std::to_string(prob_rows.size()) + " rows but " +
                 labels_path + " has " + std::to_string(labels.size()));
  const std::size_t num_classes = prob_rows.front().size();

  std::vector<LabeledSample> samples;
  samples.reserve(prob_rows.size());
  for (std::size_t i = 0; i < prob_rows.size(); ++i) {
    if (labels[i] >= num_classes)
      throw_config("ingest: " + labels_path + " row " + std::to_string(i + 1) +
                   ": label " + std::to_string(labels[i]) +
                   " >= K=" + std::to_string(num_classes));
    samples.push_back(
        LabeledSample{row_to_prob(prob_rows[i], probs_path, i + 1),
                      labels[i]});
  }

  std::optional<std::vector<ProbVector>> oracle;
  if (oracle_path) {
    const auto oracle_rows = read_csv_matrix(*oracle_path);
    if (oracle_rows.size() != samples.size() ||
        oracle_rows.front().size() != num_classes)
      throw_config("ingest: oracle shape differs from probabilities");
    std::vector<ProbVector> rows;
    rows.reserve(oracle_rows.size());
    for (std::size_t i = 0; i < oracle_rows.size(); ++i)
      rows.push_back(row_to_prob(oracle_rows[i], *oracle_path, i + 1));
    oracle = std::move(rows);
  }
  return Dataset(std::move(samples), std::move(oracle));
}

void write_csv_matrix(const std::string& path,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw_config("cannot open " + path + " for writing");
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[k]);
      if (k) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw_config("write failed for " + path);
}

void write_labels(const std::string& path,
                  const std::vector<std::size_t>& labels) {
  std::ofstream out(path);
  if (!out) throw_config("cannot open " + path + " for writing");
  for (std::size_t y : labels) out << y << '\n';
  if (!out) throw_config("write failed for " + path);
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

KvConfig KvConfig::parse_text(const std::string& text) {
  KvConfig cfg;
  std::size_t lineno = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++lineno;
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw_config("config line " + std::to_string(lineno) +
                   ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    // strip one layer of quotes
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\'')))
      value = value.substr(1, value.size() - 2);
    if (key.empty())
      throw_config("config line " + std::to_string(lineno) + ": empty key");
    cfg.entries_[key] = value;
  }
  return cfg;
}

void KvConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool KvConfig::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string KvConfig::get_string(const std::string& key,
                                 const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  return parse_double(it->second, "config key '" + key + "'");
}

std::size_t KvConfig::get_size(const std::string& key,
                               std::size_t fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  if (v < 0.0 || v != std::floor(v))
    throw_config("config key '" + key + "': expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::uint64_t KvConfig::get_u64(const std::string& key,
                                std::uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stoull(trim(it->second));
  } catch (const std::exception&) {
    throw_config("config key '" + key + "': expected an unsigned integer");
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::string v = trim(it->second);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw_config("config key '" + key + "': expected a boolean");
}

std::optional<double> KvConfig::get_optional_double(
    const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return get_double(key, 0.0);
}

std::optional<std::string> KvConfig::get_optional_string(
    const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::vector<double> KvConfig::get_double_list(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return {};
  std::vector<double> out;
  const char sep = it->second.find(':') != std::string::npos &&
                           it->second.find(',') == std::string::npos
                       ? ':'
                       : ',';
  for (const std::string& tok : split(it->second, sep)) {
    if (trim(tok).empty()) continue;
    out.push_back(parse_double(tok, "config key '" + key + "'"));
  }
  return out;
}

std::string KvConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace ecc3
