#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <set>

#include "helpers.hpp"
#include "odcmp/dates.hpp"
#include "odcmp/error.hpp"
#include "odcmp/io.hpp"
#include "odcmp/rng.hpp"

using namespace odcmp;

TEST_CASE("date parsing and formatting") {
  CHECK(parse_date("1970-01-01") == 0);
  CHECK(parse_date("1970-01-02") == 1);
  CHECK(format_date(parse_date("2021-03-31")) == "2021-03-31");
  CHECK(parse_datetime_day("2021-03-31 23:59:59") == parse_date("2021-03-31"));
  CHECK(parse_datetime_day("2021-03-31T00:00:00") == parse_date("2021-03-31"));
  CHECK_THROWS_AS(parse_date("2021-02-30"), DataError);
  CHECK_THROWS_AS(parse_date("2021-2-3"), DataError);
  CHECK_THROWS_AS(parse_datetime_day("garbage"), DataError);
  CHECK(parse_month("2021-01") == 2021 * 12);
  CHECK(format_month(parse_month("2019-12")) == "2019-12");
  CHECK_THROWS_AS(parse_month("2021-13"), DataError);

  auto range = parse_date_range("2019-01-01..2021-03-31");
  CHECK(range.contains(parse_date("2020-06-15")));
  CHECK(!range.contains(parse_date("2021-04-01")));
  CHECK_THROWS_AS(parse_date_range("2021-01-02..2021-01-01"), DataError);
}

TEST_CASE("csv line parsing handles quotes and embedded commas") {
  CsvRow row;
  parse_csv_line("a,b,c", row);
  REQUIRE(row.fields.size() == 3);
  CHECK(row.fields[1] == "b");

  parse_csv_line("x,\"{\"\"u1\"\":5,\"\"u2\"\":3}\",z\r\n", row);
  REQUIRE(row.fields.size() == 3);
  CHECK(row.fields[1] == "{\"u1\":5,\"u2\":3}");
  CHECK(row.fields[2] == "z");

  parse_csv_line("a,,c,", row);
  REQUIRE(row.fields.size() == 4);
  CHECK(row.fields[1] == "");
  CHECK(row.fields[3] == "");
}

TEST_CASE("line reader streams plain and gzip files in bounded blocks") {
  testutil::TempDir tmp("io");
  std::string content;
  for (int i = 0; i < 1000; ++i) content += "line" + std::to_string(i) + "\n";
  testutil::write(tmp.file("plain.txt"), content);

  std::string collected;
  LineReader reader(tmp.file("plain.txt"));
  std::string block;
  size_t blocks = 0;
  while (reader.next_block(block, 256)) {
    collected += block;
    if (!block.empty() && block.back() != '\n') continue;
    ++blocks;
  }
  CHECK(collected == content);
  CHECK(blocks > 1);

  REQUIRE(std::system(("gzip -k " + tmp.file("plain.txt")).c_str()) == 0);
  std::string gz_collected;
  LineReader gz(tmp.file("plain.txt.gz"));
  while (gz.next_block(block, 256)) gz_collected += block;
  CHECK(gz_collected == content);
}

TEST_CASE("split_block cuts at line boundaries and covers the block") {
  std::string block = "aa\nbbbb\ncc\ndddd\nee\n";
  for (int n : {1, 2, 3, 8}) {
    auto slices = split_block(block, n);
    std::string joined;
    for (auto s : slices) {
      joined += std::string(s);
      CHECK(s.back() == '\n');
    }
    CHECK(joined == block);
  }
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("format_double round-trips exactly") {
  rng::Stream rng(7);
  for (int i = 0; i < 1000; ++i) {
    double v = (rng.next_double() - 0.5) * std::pow(10.0, (double)rng.next_below(12));
    double back;
    REQUIRE(parse_double(format_double(v), back));
    CHECK(back == v);
  }
}

TEST_CASE("rng streams are deterministic and distributions sane") {
  rng::Stream a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());

  // uniform moments
  rng::Stream u(5);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += u.next_double();
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));

  // poisson mean/variance at small and large lambda
  for (double lambda : {3.0, 50.0, 800.0}) {
    rng::Stream p(9);
    double mean = 0, m2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      double x = (double)p.poisson(lambda);
      mean += x;
      m2 += x * x;
    }
    mean /= n;
    double var = m2 / n - mean * mean;
    CHECK(mean == doctest::Approx(lambda).epsilon(0.03));
    CHECK(var == doctest::Approx(lambda).epsilon(0.08));
  }

  // binomial mean at n=10000, p=0.5 within 3 sigma (the spec's thinning oracle)
  rng::Stream bin(11);
  double kept = (double)bin.binomial(10000, 0.5);
  CHECK(std::fabs(kept - 5000.0) <= 3.0 * std::sqrt(10000 * 0.25));

  // derive_seed separates streams
  CHECK(rng::derive_seed(1, 0) != rng::derive_seed(1, 1));
  CHECK(rng::derive_seed(1, 0) != rng::derive_seed(2, 0));
}
