#include "crossfit/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "crossfit/errors.hpp"

namespace crossfit {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& tok, const std::string& column, int row) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e)
    throw Error("DATA_FORMAT", "non-numeric value '" + tok + "' in column " + column + ", row " +
                                   std::to_string(row));
  return v;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<int>(j);
  return -1;
}

// Columns prefix1..prefixR; returns the ordered column indices or empty.
std::vector<int> find_numbered(const std::vector<std::string>& header, const std::string& prefix) {
  std::vector<int> cols;
  for (int k = 1;; ++k) {
    const int j = find_column(header, prefix + std::to_string(k));
    if (j < 0) break;
    cols.push_back(j);
  }
  return cols;
}

}  // namespace

LoadedData parse_csv(const std::string& text, FunctionalKind kind, const CsvOptions& opt) {
  std::vector<std::string> lines;
  {
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!trim(line).empty()) lines.push_back(line);
    }
  }
  if (lines.empty()) throw Error("DATA_FORMAT", "empty file");
  const std::vector<std::string> header = split_fields(lines[0]);

  const int y_col = find_column(header, "y");
  if (y_col < 0) throw Error("DATA_FORMAT", "missing column 'y'");

  const std::string cov_prefix = kind == FunctionalKind::missing_data_mean ? "w" : "x";
  const std::vector<int> x_cols = find_numbered(header, cov_prefix);
  if (x_cols.empty())
    throw Error("DATA_FORMAT", "missing column '" + cov_prefix + "1'");

  std::vector<int> a_cols;
  bool a_optional_missing = false;
  if (kind == FunctionalKind::partially_linear) {
    const int a_col = find_column(header, "a");
    if (a_col >= 0) {
      a_cols.push_back(a_col);
    } else {
      a_cols = find_numbered(header, "a");
      if (a_cols.empty()) throw Error("DATA_FORMAT", "missing column 'a'");
    }
  } else {
    const int a_col = find_column(header, "a");
    if (a_col >= 0) {
      a_cols.push_back(a_col);
    } else if (kind == FunctionalKind::weighted_average_derivative) {
      a_optional_missing = true;  // the derivative functional never reads a
    } else {
      throw Error("DATA_FORMAT", "missing column 'a'");
    }
  }

  const int n = static_cast<int>(lines.size()) - 1;
  if (n < 1) throw Error("DATA_FORMAT", "no data rows");
  const int r = static_cast<int>(x_cols.size());
  const int d_a = a_optional_missing ? 1 : static_cast<int>(a_cols.size());

  LoadedData out;
  out.data.y.resize(n);
  out.data.a = Eigen::MatrixXd::Zero(n, d_a);
  out.data.x.resize(n, r);

  for (int i = 0; i < n; ++i) {
    const int row = i + 1;  // 1-based data row, matching error messages
    const std::vector<std::string> fields = split_fields(lines[static_cast<size_t>(row)]);
    if (fields.size() != header.size())
      throw Error("DATA_FORMAT", "row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(header.size()));
    out.data.y(i) = parse_number(fields[static_cast<size_t>(y_col)], "y", row);
    for (size_t j = 0; j < a_cols.size(); ++j) {
      const std::string& name = header[static_cast<size_t>(a_cols[j])];
      out.data.a(i, static_cast<int>(j)) =
          parse_number(fields[static_cast<size_t>(a_cols[j])], name, row);
    }
    for (int j = 0; j < r; ++j) {
      const std::string& name = header[static_cast<size_t>(x_cols[static_cast<size_t>(j)])];
      out.data.x(i, j) =
          parse_number(fields[static_cast<size_t>(x_cols[static_cast<size_t>(j)])], name, row);
    }
    if (kind == FunctionalKind::missing_data_mean) {
      const double ai = out.data.a(i, 0);
      if (ai != 0.0 && ai != 1.0)
        throw Error("DATA_FORMAT",
                    "missing-data indicator must be 0 or 1 (row " + std::to_string(row) + ")");
    }
  }

  out.covariate_range.resize(static_cast<size_t>(r));
  for (int j = 0; j < r; ++j) {
    out.covariate_range[static_cast<size_t>(j)] = {out.data.x.col(j).minCoeff(),
                                                   out.data.x.col(j).maxCoeff()};
  }
  if (opt.rescale) {
    out.rescaled = true;
    for (int j = 0; j < r; ++j) {
      const auto [lo, hi] = out.covariate_range[static_cast<size_t>(j)];
      if (hi > lo)
        out.data.x.col(j) = (out.data.x.col(j).array() - lo) / (hi - lo);
      else
        out.data.x.col(j).setConstant(0.5);  // a constant column has no scale
    }
  } else {
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i < n; ++i) {
        const double v = out.data.x(i, j);
        if (v < 0.0 || v > 1.0) {
          const std::string name = cov_prefix + std::to_string(j + 1);
          throw Error("DOMAIN", "covariate " + name + " = " + std::to_string(v) + " in row " +
                                    std::to_string(i + 1) +
                                    " is outside [0,1]; rerun with rescaling enabled");
        }
      }
    }
  }
  return out;
}

LoadedData load_csv(const std::string& path, FunctionalKind kind, const CsvOptions& opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("DATA_FORMAT", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), kind, opt);
}

void write_csv(const std::string& path, const Dataset& data, FunctionalKind kind) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("DATA_FORMAT", "cannot open '" + path + "' for writing");
  const std::string cov = kind == FunctionalKind::missing_data_mean ? "w" : "x";
  out << "y";
  if (data.d_a() == 1)
    out << ",a";
  else
    for (int j = 1; j <= data.d_a(); ++j) out << ",a" << j;
  for (int j = 1; j <= data.r(); ++j) out << "," << cov << j;
  out << "\n";
  char buf[64];
  for (int i = 0; i < data.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", data.y(i));
    out << buf;
    for (int j = 0; j < data.d_a(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.a(i, j));
      out << "," << buf;
    }
    for (int j = 0; j < data.r(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.x(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace crossfit
