#pragma once

// Minimal CSV helpers. Fields never contain commas or quotes (model names
// and labels are validated identifiers), so no quoting is needed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qonv/error.hpp"

namespace qonv::harness {

/// 9 significant digits; non-finite values as inf, -inf, nan.
inline std::string fmt9(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// The value a reader recovers from fmt9(v).
inline double round9(double v) { return std::strtod(fmt9(v).c_str(), nullptr); }

inline double parse_csv_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw IoError("malformed number in CSV: '" + s + "'");
  return v;
}

/// NaN-aware equality used for round-trip comparisons.
inline bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

using CsvRow = std::vector<std::string>;

class CsvWriter {
public:
  explicit CsvWriter(const CsvRow& header) { row(header); }
  CsvWriter& row(const CsvRow& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ += ',';
      out_ += fields[i];
    }
    out_ += '\n';
    return *this;
  }
  const std::string& str() const noexcept { return out_; }

private:
  std::string out_;
};

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw IoError("CSV has no column '" + name + "'");
  }
};

inline CsvTable parse_csv(const std::string& text, const std::string& source = "<csv>") {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CsvRow fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size()) throw IoError(source + ": row width does not match header");
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw IoError(source + ": empty CSV");
  return t;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes `path` via a sibling temporary file and a rename, so readers never
/// observe a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string() + ": cannot create directory: " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": rename failed: " + ec.message());
}

} // namespace qonv::harness
