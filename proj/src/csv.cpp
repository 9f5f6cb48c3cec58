#include "pinnstab/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pinnstab/errors.hpp"

namespace pinnstab {

Record& Record::add(std::string column, double v) {
  fields_.emplace_back(std::move(column), v);
  return *this;
}

Record& Record::add(std::string column, std::int64_t v) {
  fields_.emplace_back(std::move(column), v);
  return *this;
}

Record& Record::add(std::string column, std::string v) {
  fields_.emplace_back(std::move(column), std::move(v));
  return *this;
}

std::vector<std::string> Record::columns() const {
  std::vector<std::string> out;
  out.reserve(fields_.size());
  for (const auto& f : fields_) out.push_back(f.first);
  return out;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string format_value(const CsvValue& v) {
  if (const double* d = std::get_if<double>(&v)) return format_real(*d);
  if (const std::int64_t* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return quote(std::get<std::string>(v));
}

void emit_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
              const std::vector<Record>& records) {
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& fields = records[r].fields();
    bool same = fields.size() == columns.size();
    for (std::size_t i = 0; same && i < fields.size(); ++i) same = fields[i].first == columns[i];
    if (!same) throw ArgumentError("csv schema mismatch in record " + std::to_string(r) + " for " + path.string());
    for (const auto& [name, value] : fields) {
      if (const double* d = std::get_if<double>(&value); d != nullptr && !std::isfinite(*d)) {
        throw ArgumentError("csv record " + std::to_string(r) + " has non-finite value in column " + name);
      }
    }
  }

  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << quote(columns[i]);
  os << '\n';
  for (const Record& rec : records) {
    const auto& fields = rec.fields();
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << format_value(fields[i].second);
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ArgumentError("csv has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& s = rows.at(row).at(column(name));
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ArgumentError("csv value '" + s + "' in column " + name + " is not numeric");
  return v;
}

const std::string& CsvTable::text(std::size_t row, const std::string& name) const {
  return rows.at(row).at(column(name));
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty csv file " + path.string());
  t.header = split_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto row = split_line(line);
    if (row.size() != t.header.size()) {
      throw IoError(path.string() + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                    std::to_string(row.size()) + " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace pinnstab
