#include "smcgen/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "smcgen/errors.hpp"

namespace smcgen {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string metadata_line(std::string_view canonical_config, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "config_hash=%016llx seed=%llu",
                static_cast<unsigned long long>(fnv1a64(canonical_config)),
                static_cast<unsigned long long>(seed));
  return buf;
}

void ensure_directory(const std::string& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw ConfigError("cannot create directory " + directory + ": " + ec.message());
}

CsvWriter::CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw ConfigError("cannot open " + path + " for writing");
}

void CsvWriter::header(const std::vector<std::string>& columns) { row_strings(columns); }

void CsvWriter::row_strings(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
}

void CsvWriter::finish(const std::string& metadata) {
  out_ << "# " << metadata << '\n';
  out_.flush();
  if (!out_) throw ConfigError("write failed for " + path_);
}

}  // namespace smcgen
