#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "pinnstab/csv.hpp"
#include "pinnstab/errors.hpp"
#include "support.hpp"

using namespace pinnstab;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("real formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_real(v)) == v);
  CHECK(format_real(2.0) == "2");
}

TEST_CASE("emit and read back") {
  const auto dir = testsupport::scratch_dir("csv");
  const std::vector<std::string> cols = {"experiment", "seed", "value"};
  std::vector<Record> rows;
  rows.push_back(Record().add("experiment", "a,b \"q\"").add("seed", 7).add("value", 0.1));
  rows.push_back(Record().add("experiment", "plain").add("seed", std::int64_t{-3}).add("value", 1e-17));
  emit_csv(dir / "t.csv", cols, rows);
  const std::string text = slurp(dir / "t.csv");
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.rfind("experiment,seed,value\n", 0) == 0);
  const CsvTable t = read_csv(dir / "t.csv");
  CHECK(t.header == cols);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.text(0, "experiment") == "a,b \"q\"");
  CHECK(t.number(0, "value") == 0.1);
  CHECK(t.number(1, "seed") == -3.0);
  CHECK(t.number(1, "value") == 1e-17);
  CHECK_THROWS_AS(t.column("missing"), ArgumentError);
  CHECK_THROWS_AS(t.number(0, "experiment"), ArgumentError);
}

TEST_CASE("header-only file for no records") {
  const auto dir = testsupport::scratch_dir("csv_empty");
  emit_csv(dir / "e.csv", {"x", "y"}, {});
  CHECK(slurp(dir / "e.csv") == "x,y\n");
  CHECK(read_csv(dir / "e.csv").rows.empty());
}

TEST_CASE("schema mismatch and non-finite values are rejected") {
  const auto dir = testsupport::scratch_dir("csv_bad");
  std::vector<Record> wrong = {Record().add("y", 1.0).add("x", 2.0)};
  CHECK_THROWS_AS(emit_csv(dir / "w.csv", {"x", "y"}, wrong), ArgumentError);
  std::vector<Record> nan = {Record().add("x", std::numeric_limits<double>::quiet_NaN())};
  CHECK_THROWS_AS(emit_csv(dir / "n.csv", {"x"}, nan), ArgumentError);
  std::vector<Record> inf = {Record().add("x", -std::numeric_limits<double>::infinity())};
  CHECK_THROWS_AS(emit_csv(dir / "i.csv", {"x"}, inf), ArgumentError);
  emit_csv(dir / "nested" / "dirs" / "ok.csv", {"x"}, {});
  CHECK(std::filesystem::exists(dir / "nested" / "dirs" / "ok.csv"));
  std::ofstream(dir / "plain").close();
  CHECK_THROWS_AS(emit_csv(dir / "plain" / "under_a_file.csv", {"x"}, {}), IoError);
  CHECK_THROWS_AS(read_csv(dir / "absent.csv"), IoError);
}
