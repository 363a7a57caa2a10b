#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace vrg {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

nlohmann::json read_json(const std::filesystem::path& path);
/// Canonical form: sorted keys, two-space indent, trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Flat binary container: an 8-byte little-endian header length, a JSON
/// header, then the payload as little-endian IEEE-754 doubles.
struct Container {
  nlohmann::json header;
  std::vector<double> payload;
};

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const double> payload);
Container read_container(const std::filesystem::path& path);

/// Reads a numeric CSV with a header row. Returns the column names and rows.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace vrg
