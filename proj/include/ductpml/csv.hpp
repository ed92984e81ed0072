#pragma once

// Plain CSV output: fixed header, '.' decimal separator, 17 significant
// digits in scientific notation.

#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "ductpml/errors.hpp"

namespace ductpml {

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& add(double x) { cells_.push_back(format_real(x)); return *this; }
    Row& add(std::complex<double> z) { add(z.real()); return add(z.imag()); }
    Row& add(int x) { cells_.push_back(std::to_string(x)); return *this; }
    Row& add(long x) { cells_.push_back(std::to_string(x)); return *this; }
    Row& add(std::size_t x) { cells_.push_back(std::to_string(x)); return *this; }
    Row& add(bool b) { cells_.push_back(b ? "true" : "false"); return *this; }
    Row& add(const std::string& s) { cells_.push_back(s); return *this; }
    Row& add(const char* s) { cells_.push_back(s); return *this; }

   private:
    friend class CsvTable;
    std::vector<std::string> cells_;
  };

  Row& row() {
    rows_.emplace_back();
    return rows_.back();
  }

  [[nodiscard]] std::string str() const {
    std::string out;
    join(out, header_);
    for (const auto& r : rows_) {
      if (r.cells_.size() != header_.size()) throw ContractError("csv row width differs from header");
      join(out, r.cells_);
    }
    return out;
  }

  [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

 private:
  static void join(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

/// key=value lines.
class Summary {
 public:
  void set(const std::string& key, const std::string& value) { items_.emplace_back(key, value); }
  void set(const std::string& key, double value) { set(key, format_real(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }

  [[nodiscard]] std::string str() const {
    std::string out;
    for (const auto& [k, v] : items_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ductpml
