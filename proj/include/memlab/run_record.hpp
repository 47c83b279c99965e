#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace memlab {

/// Tabular measurements from one experiment plus the resolved flat config
/// that produced them. Serializes to CSV with the config echoed in '#'
/// comment lines and a content hash over the data section, so identical
/// configs reproduce identical bytes.
struct RunRecord {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, std::string> config;

  void add_row(std::vector<double> row);
};

/// Shortest-round-trip formatting for doubles (printf %.17g trimmed), fixed
/// across the codebase so artifact bytes are stable.
std::string format_double(double v);

/// FNV-1a 64-bit hash, hex-encoded.
std::string fnv1a_hex(const std::string& data);

std::string to_csv(const RunRecord& record);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace memlab
