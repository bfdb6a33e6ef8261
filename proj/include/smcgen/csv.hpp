#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace smcgen {

// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes);

// "config_hash=<16 hex digits> seed=<decimal>", the trailing comment of every CSV.
std::string metadata_line(std::string_view canonical_config, std::uint64_t seed);

void ensure_directory(const std::string& directory);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void header(const std::vector<std::string>& columns);

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((write_field(fields, first)), ...);
    out_ << '\n';
  }
  void row_strings(const std::vector<std::string>& fields);

  // Appends "# <metadata>" and flushes; the file is complete afterwards.
  void finish(const std::string& metadata);

 private:
  template <class T>
  void write_field(const T& v, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      out_ << format_double(static_cast<double>(v));
    } else if constexpr (std::is_same_v<T, bool>) {
      out_ << (v ? 1 : 0);
    } else {
      out_ << v;
    }
  }

  std::string path_;
  std::ofstream out_;
};

}  // namespace smcgen
