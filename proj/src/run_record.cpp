#include "memlab/run_record.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace memlab {

void RunRecord::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw std::runtime_error("RunRecord: row width does not match columns");
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  char buf[40];
  if (v == static_cast<long long>(v) && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
  }
  // %.17g always round-trips; try shorter forms first for readable files.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = std::strtod(buf, nullptr);
    if (back == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& data) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string to_csv(const RunRecord& record) {
  std::ostringstream data;
  for (size_t i = 0; i < record.columns.size(); ++i) {
    if (i) data << ',';
    data << record.columns[i];
  }
  data << '\n';
  for (const auto& row : record.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) data << ',';
      data << format_double(row[i]);
    }
    data << '\n';
  }

  std::ostringstream out;
  for (const auto& [key, value] : record.config) out << "# " << key << "=" << value << '\n';
  std::string body = data.str();
  out << "# content_hash=" << fnv1a_hex(body) << '\n';
  out << body;
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace memlab
