#include "dynsparse/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "dynsparse/errors.hpp"

namespace dynsparse {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Lines with their 1-based numbers; the final empty line after a trailing newline is dropped.
std::vector<std::pair<long, std::string_view>> numbered_lines(std::string_view text) {
  std::vector<std::pair<long, std::string_view>> out;
  long number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto pos = text.find('\n', start);
    const auto end = pos == std::string_view::npos ? text.size() : pos;
    out.emplace_back(++number, text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::optional<long> parse_long(std::string_view cell) {
  cell = trim(cell);
  long value = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc() || ptr != end || cell.empty()) return std::nullopt;
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256_hex: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

RegressionData parse_data_csv(std::string_view text) {
  const auto lines = numbered_lines(text);
  std::size_t index = 0;
  while (index < lines.size() && (trim(lines[index].second).empty() || lines[index].second.starts_with('#'))) ++index;
  if (index == lines.size()) throw ParseError("data file has no header", 0);

  const auto [header_line, header_text] = lines[index++];
  const auto header = split(header_text, ',');
  if (header.size() < 3 || header[0] != "t" || header[1] != "y") {
    throw ParseError("header must be t,y,x1,...,xp", header_line);
  }
  const std::size_t p = header.size() - 2;
  for (std::size_t j = 0; j < p; ++j) {
    if (header[j + 2] != "x" + std::to_string(j + 1)) {
      throw ParseError("expected column x" + std::to_string(j + 1) + ", found '" + std::string(header[j + 2]) + "'",
                       header_line);
    }
  }

  std::vector<Eigen::VectorXd> ys;
  std::vector<Eigen::MatrixXd> xs;
  std::vector<long> labels;
  std::vector<double> y_rows;
  std::vector<double> x_rows;
  auto flush = [&] {
    const auto n = static_cast<Eigen::Index>(y_rows.size());
    ys.emplace_back(Eigen::Map<Eigen::VectorXd>(y_rows.data(), n));
    xs.emplace_back(Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        x_rows.data(), n, static_cast<Eigen::Index>(p)));
    y_rows.clear();
    x_rows.clear();
  };

  for (; index < lines.size(); ++index) {
    const auto [number, text_line] = lines[index];
    if (trim(text_line).empty()) continue;
    const auto cells = split(text_line, ',');
    if (cells.size() != p + 2) {
      throw ParseError("expected " + std::to_string(p + 2) + " cells, found " + std::to_string(cells.size()), number);
    }
    const auto t = parse_long(cells[0]);
    if (!t || *t < 1) throw ParseError("t must be a positive integer, found '" + std::string(cells[0]) + "'", number);
    if (!labels.empty() && *t < labels.back()) throw ParseError("rows must be sorted by t", number);
    if (labels.empty() || *t != labels.back()) {
      if (!labels.empty()) flush();
      labels.push_back(*t);
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = parse_double(cells[c]);
      if (!v) throw ParseError("non-numeric cell '" + std::string(cells[c]) + "' in column " + std::string(header[c]), number);
      (c == 1 ? y_rows : x_rows).push_back(*v);
    }
  }
  if (labels.empty()) throw ParseError("data file has no rows", 0);
  flush();
  return RegressionData(std::move(ys), std::move(xs), std::move(labels));
}

RegressionData load_data(const std::filesystem::path& path) { return parse_data_csv(read_text_file(path)); }

std::string data_csv_body(const RegressionData& data) {
  std::ostringstream out;
  out << "t,y";
  for (int j = 1; j <= data.p(); ++j) out << ",x" << j;
  out << '\n';
  for (int t = 0; t < data.T(); ++t) {
    const auto& X = data.X(t);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out << data.label(t) << ',' << format_double(data.y(t)[i]);
      for (Eigen::Index j = 0; j < X.cols(); ++j) out << ',' << format_double(X(i, j));
      out << '\n';
    }
  }
  return out.str();
}

std::string estimates_csv_body(const std::vector<EstimateRow>& rows) {
  std::ostringstream out;
  out << "t,j,estimate,lower,upper,support\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.j << ',' << format_double(r.estimate) << ','
        << (r.lower ? format_double(*r.lower) : "") << ',' << (r.upper ? format_double(*r.upper) : "") << ','
        << (r.support ? 1 : 0) << '\n';
  }
  return out.str();
}

std::vector<EstimateRow> parse_estimates_csv(std::string_view text) {
  const auto lines = numbered_lines(text);
  std::size_t index = 0;
  while (index < lines.size() && lines[index].second.starts_with('#')) ++index;
  if (index == lines.size() || trim(lines[index].second) != "t,j,estimate,lower,upper,support") {
    throw ParseError("estimates header must be t,j,estimate,lower,upper,support", index < lines.size() ? lines[index].first : 0);
  }
  std::vector<EstimateRow> rows;
  for (++index; index < lines.size(); ++index) {
    const auto [number, line] = lines[index];
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 6) throw ParseError("expected 6 cells", number);
    const auto t = parse_long(cells[0]);
    const auto j = parse_long(cells[1]);
    const auto estimate = parse_double(cells[2]);
    const auto support = parse_long(cells[5]);
    if (!t || !j || !estimate || !support || (*support != 0 && *support != 1)) {
      throw ParseError("malformed estimate row", number);
    }
    EstimateRow row{*t, static_cast<int>(*j), *estimate, std::nullopt, std::nullopt, *support == 1};
    if (!cells[3].empty()) {
      row.lower = parse_double(cells[3]);
      if (!row.lower) throw ParseError("malformed lower bound", number);
    }
    if (!cells[4].empty()) {
      row.upper = parse_double(cells[4]);
      if (!row.upper) throw ParseError("malformed upper bound", number);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw UsageError("write failed for '" + path.string() + "'");
}

std::string stamp(std::string_view manifest_hash, std::string_view body) {
  std::string out = "# manifest=";
  out.append(manifest_hash);
  out.push_back('\n');
  out.append(body);
  return out;
}

std::pair<std::string, std::string> split_stamp(std::string_view text) {
  constexpr std::string_view kPrefix = "# manifest=";
  const auto newline = text.find('\n');
  if (!text.starts_with(kPrefix) || newline == std::string_view::npos) {
    throw ParseError("missing '# manifest=' stamp", 1);
  }
  return {std::string(text.substr(kPrefix.size(), newline - kPrefix.size())), std::string(text.substr(newline + 1))};
}

}  // namespace dynsparse
