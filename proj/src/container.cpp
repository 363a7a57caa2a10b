#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vrg/errors.hpp"
#include "vrg/io.hpp"

namespace vrg {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) fail(ErrorKind::numerical, "cannot format double");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    fail(ErrorKind::schema, "not a number: '" + text + "'");
  }
  return value;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::schema, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const double> payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  const std::string text = header.dump();
  const std::uint64_t length = text.size();
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size_bytes()));
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || length > (1ULL << 30)) fail(ErrorKind::schema, path.string() + ": bad container header");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) fail(ErrorKind::schema, path.string() + ": truncated container header");
  Container c;
  try {
    c.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::schema, path.string() + ": " + e.what());
  }
  std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (rest.size() % sizeof(double) != 0) {
    fail(ErrorKind::schema, path.string() + ": payload is not a whole number of doubles");
  }
  c.payload.resize(rest.size() / sizeof(double));
  std::memcpy(c.payload.data(), rest.data(), rest.size());
  return c;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::schema, path.string() + ": empty CSV");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.columns.push_back(trim(cell));
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell));
    if (row.size() != table.columns.size()) {
      fail(ErrorKind::schema, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.columns.size()) + " columns");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace vrg
