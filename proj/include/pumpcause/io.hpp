#ifndef PUMPCAUSE_IO_HPP
#define PUMPCAUSE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pumpcause::io {

/// Splits one CSV line on commas. Quoting is not supported; fields are trimmed.
std::vector<std::string_view> split_csv(std::string_view line);

std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest representation that parses back to the identical double.
std::string format_double(double v);

/// Reads lines, stripping a trailing '\r'. Line numbers are 1-based.
class LineReader {
public:
  LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}
  bool next(std::string& line);
  std::size_t line_number() const { return line_; }
  const std::string& name() const { return name_; }

private:
  std::istream& in_;
  std::string name_;
  std::size_t line_ = 0;
};

/// Reads the header line and throws ParseError unless it equals `expected`.
void expect_header(LineReader& reader, std::string_view expected);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary file and rename, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// FNV-1a, used for cache fingerprints (not cryptographic).
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace pumpcause::io

#endif  // PUMPCAUSE_IO_HPP
