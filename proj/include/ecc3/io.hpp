#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecc3/dataset.hpp"

namespace ecc3 {

/// Header-less CSV of n rows by K float columns.
std::vector<std::vector<double>> read_csv_matrix(const std::string& path);

/// One integer label per line (or per CSV row).
std::vector<std::size_t> read_labels(const std::string& path);

/// Builds a validated Dataset from a probability CSV, a label file and an
/// optional oracle CSV of the same shape. Rows are renormalized under the
/// simplex tolerance policy; errors name the offending 1-based row.
Dataset ingest(const std::string& probs_path, const std::string& labels_path,
               const std::optional<std::string>& oracle_path = std::nullopt);

void write_csv_matrix(const std::string& path,
                      const std::vector<std::vector<double>>& rows);
void write_labels(const std::string& path,
                  const std::vector<std::size_t>& labels);

// Flat key = value config text. '#' starts a comment; keys are unique;
// later assignments override earlier ones.
class KvConfig {
 public:
  KvConfig() = default;
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  std::optional<std::string> get_optional_string(const std::string& key) const;

  /// Comma- or colon-separated list of doubles.
  std::vector<double> get_double_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

  /// "key = value" lines, keys sorted; the canonical form that gets hashed.
  std::string canonical_text() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// FNV-1a 64-bit, hex string; config fingerprint for report provenance.
std::string fnv1a_hex(const std::string& text);

}  // namespace ecc3
