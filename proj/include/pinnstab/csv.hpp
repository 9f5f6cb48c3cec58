#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pinnstab {

using CsvValue = std::variant<double, std::int64_t, std::string>;

/// One CSV row as ordered (column, value) pairs.
class Record {
 public:
  Record& add(std::string column, double v);
  Record& add(std::string column, std::int64_t v);
  Record& add(std::string column, int v) { return add(std::move(column), static_cast<std::int64_t>(v)); }
  Record& add(std::string column, std::uint64_t v) { return add(std::move(column), static_cast<std::int64_t>(v)); }
  Record& add(std::string column, std::string v);
  Record& add(std::string column, const char* v) { return add(std::move(column), std::string(v)); }

  const std::vector<std::pair<std::string, CsvValue>>& fields() const noexcept { return fields_; }
  std::vector<std::string> columns() const;

 private:
  std::vector<std::pair<std::string, CsvValue>> fields_;
};

/// Shortest text that round-trips the double (17 significant digits).
std::string format_real(double v);
std::string format_value(const CsvValue& v);

/// Writes a header row then one row per record, LF line endings. Every
/// record must carry exactly `columns` in order and finite reals.
/// Throws ArgumentError on schema mismatch, IoError when unwritable.
void emit_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
              const std::vector<Record>& records);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index; throws ArgumentError if missing.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  const std::string& text(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace pinnstab
