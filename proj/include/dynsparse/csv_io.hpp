#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynsparse/regression_data.hpp"

namespace dynsparse {

/// Shortest-safe round-trip text for a double (%.17g).
std::string format_double(double value);

/// Strict decimal parse of a whole cell (surrounding blanks allowed).
/// Returns nullopt for anything else, including "nan" and "inf".
std::optional<double> parse_double(std::string_view cell);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Long-format regression CSV: header `t,y,x1,...,xp`, one row per
/// observation, rows sorted by t, t a positive integer. Lines starting
/// with '#' before the header are ignored. Throws ParseError with the line
/// number for malformed rows, inconsistent p, non-numeric cells, or
/// decreasing t.
RegressionData parse_data_csv(std::string_view text);
RegressionData load_data(const std::filesystem::path& path);

/// CSV text for `data` in the load_data format (no manifest line).
std::string data_csv_body(const RegressionData& data);

struct EstimateRow {
  long t;
  int j;  // 1-based predictor index
  double estimate;
  std::optional<double> lower;
  std::optional<double> upper;
  bool support;
};

/// Header `t,j,estimate,lower,upper,support`; lower/upper empty when unset.
std::string estimates_csv_body(const std::vector<EstimateRow>& rows);
std::vector<EstimateRow> parse_estimates_csv(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// An output file stamped with the manifest hash on its first line.
std::string stamp(std::string_view manifest_hash, std::string_view body);

/// Splits a stamped file into (manifest hash, body). Throws ParseError if
/// the first line is not `# manifest=<hash>`.
std::pair<std::string, std::string> split_stamp(std::string_view text);

}  // namespace dynsparse
