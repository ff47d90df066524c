#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sstream>

#include "helpers.hpp"
#include "odcmp/dates.hpp"
#include "odcmp/error.hpp"
#include "odcmp/ingest.hpp"
#include "odcmp/io.hpp"
#include "odcmp/rng.hpp"

using namespace odcmp;
using testutil::TempDir;

namespace {

IngestOptions window_2021q1() {
  IngestOptions options;
  options.window = parse_date_range("2021-01-01..2021-03-31");
  return options;
}

std::string taxi_header() { return "pickup_datetime,PULocationID,DOLocationID\n"; }

// The brute-force tally oracle: an entirely separate read of the same file
// with std::getline and naive splitting.
std::map<std::pair<std::string, std::string>, uint64_t> tally_taxi(const std::string& path,
                                                                   const DateRange& window) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  std::map<std::pair<std::string, std::string>, uint64_t> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string dt, pu, dref;
    std::getline(ss, dt, ',');
    std::getline(ss, pu, ',');
    std::getline(ss, dref, ',');
    int32_t day;
    try {
      day = parse_datetime_day(dt);
    } catch (const DataError&) {
      continue;
    }
    if (!window.contains(day)) continue;
    cells[{pu, dref}] += 1;
  }
  return cells;
}

}  // namespace

TEST_CASE("ingest_od_trips: single record fills one cell") {
  TempDir tmp("taxi");
  ZoneRegistry reg = testutil::simple_registry(10);
  testutil::write(tmp.file("t.csv"), taxi_header() + "2021-01-15 08:00:00,z004,z007\n");
  FlowTable t = ingest_od_trips(tmp.file("t.csv"), reg, window_2021q1(), "taxi");
  CHECK(t.total() == 1);
  CHECK(t.cell(*reg.find_zone("z004"), *reg.find_zone("z007")) == 1);
  CHECK(t.rejects().accepted == 1);
  CHECK(t.rejects().rejected == 0);
}

TEST_CASE("ingest_od_trips: out-of-window record is rejected, cells unchanged") {
  TempDir tmp("taxi");
  ZoneRegistry reg = testutil::simple_registry(10);
  testutil::write(tmp.file("t.csv"), taxi_header() +
                                         "2020-12-31 23:59:59,z004,z007\n"
                                         "2021-04-01 00:00:00,z004,z007\n");
  FlowTable t = ingest_od_trips(tmp.file("t.csv"), reg, window_2021q1(), "taxi");
  CHECK(t.total() == 0);
  CHECK(t.rejects().rejected == 2);
  CHECK(t.rejects().reason_count("out-of-window") == 2);
}

TEST_CASE("ingest_od_trips: unknown zones, bad dates, malformed rows") {
  TempDir tmp("taxi");
  ZoneRegistry reg = testutil::simple_registry(5);
  IngestOptions options = window_2021q1();
  options.reject_threshold = 1.0;  // keep the run alive for the accounting
  testutil::write(tmp.file("t.csv"), taxi_header() +
                                         "2021-01-15 08:00:00,z900,z001\n"
                                         "2021-01-15 08:00:00,z001,z900\n"
                                         "2021-13-40 08:00:00,z001,z002\n"
                                         "nonsense\n"
                                         "2021-01-15 08:00:00,z001,z002\n");
  FlowTable t = ingest_od_trips(tmp.file("t.csv"), reg, options, "taxi");
  CHECK(t.total() == 1);
  CHECK(t.rejects().reason_count("unknown-origin-zone") == 1);
  CHECK(t.rejects().reason_count("unknown-dest-zone") == 1);
  CHECK(t.rejects().reason_count("bad-date") == 1);
  CHECK(t.rejects().reason_count("malformed-row") == 1);
  // conservation: accepted + rejected = input records
  CHECK(t.rejects().accepted + t.rejects().rejected == 5);
}

TEST_CASE("ingest_od_trips: reject threshold aborts on schema drift") {
  TempDir tmp("taxi");
  ZoneRegistry reg = testutil::simple_registry(5);
  std::string body = taxi_header();
  for (int i = 0; i < 100; ++i) body += "2021-01-15 08:00:00,zBAD,z001\n";
  testutil::write(tmp.file("t.csv"), body);
  try {
    ingest_od_trips(tmp.file("t.csv"), reg, window_2021q1(), "taxi");
    FAIL("expected reject-threshold-exceeded");
  } catch (const DataError& e) {
    CHECK(e.kind() == "reject-threshold-exceeded");
  }

  // out-of-window records are expected filtering and never trip the threshold
  std::string windowed = taxi_header();
  for (int i = 0; i < 100; ++i) windowed += "2019-06-15 08:00:00,z001,z002\n";
  windowed += "2021-01-15 08:00:00,z001,z002\n";
  testutil::write(tmp.file("w.csv"), windowed);
  FlowTable t = ingest_od_trips(tmp.file("w.csv"), reg, window_2021q1(), "taxi");
  CHECK(t.total() == 1);
}

TEST_CASE("ingest_od_trips: 1000-row fixture equals brute-force tally") {
  TempDir tmp("taxi");
  const int zones = 12;
  ZoneRegistry reg = testutil::simple_registry(zones);
  rng::Stream rng(555);
  std::string body = taxi_header();
  for (int i = 0; i < 1000; ++i) {
    int m = 1 + (int)rng.next_below(4);  // some months outside the window
    int d = 1 + (int)rng.next_below(28);
    char line[64];
    std::snprintf(line, sizeof(line), "2021-%02d-%02d 07:%02d:00,z%03d,z%03d\n", m, d,
                  (int)rng.next_below(60), (int)rng.next_below(zones), (int)rng.next_below(zones));
    body += line;
  }
  testutil::write(tmp.file("t.csv"), body);

  IngestOptions options = window_2021q1();
  options.reject_threshold = 1.0;
  FlowTable t = ingest_od_trips(tmp.file("t.csv"), reg, options, "taxi");
  auto oracle = tally_taxi(tmp.file("t.csv"), options.window);

  uint64_t oracle_total = 0;
  for (const auto& [key, count] : oracle) {
    oracle_total += count;
    CHECK(t.cell(*reg.find_zone(key.first), *reg.find_zone(key.second)) == count);
  }
  CHECK(t.total() == oracle_total);
  CHECK(t.sorted_cells().size() == oracle.size());
}

TEST_CASE("ingest_od_trips: parallel equals serial reference, any worker count, gzip too") {
  TempDir tmp("taxi");
  const int zones = 8;
  ZoneRegistry reg = testutil::simple_registry(zones);
  rng::Stream rng(77);
  std::string body = taxi_header();
  for (int i = 0; i < 5000; ++i) {
    char line[64];
    std::snprintf(line, sizeof(line), "2021-0%d-%02d 12:00:00,z%03d,z%03d\n",
                  1 + (int)rng.next_below(3), 1 + (int)rng.next_below(28),
                  (int)rng.next_below(zones), (int)rng.next_below(zones));
    body += line;
  }
  testutil::write(tmp.file("t.csv"), body);
  REQUIRE(std::system(("gzip -k " + tmp.file("t.csv")).c_str()) == 0);

  IngestOptions options = window_2021q1();
  FlowTable serial = ingest_od_trips_serial(tmp.file("t.csv"), reg, options, "taxi");
  for (int workers : {1, 2, 4, 8}) {
    options.workers = workers;
    FlowTable parallel = ingest_od_trips(tmp.file("t.csv"), reg, options, "taxi");
    CHECK(parallel == serial);
    FlowTable gz = ingest_od_trips(tmp.file("t.csv.gz"), reg, options, "taxi");
    CHECK(gz == serial);
  }
}

TEST_CASE("ingest_od_trips: custom column names and passenger weighting") {
  TempDir tmp("taxi");
  ZoneRegistry reg = testutil::simple_registry(5);
  testutil::write(tmp.file("t.csv"),
                  "tpep_pickup_datetime,PU,DO,passengers\n"
                  "2021-01-15 08:00:00,z001,z002,3\n"
                  "2021-01-15 09:00:00,z001,z002,1.0\n");
  IngestOptions options = window_2021q1();
  options.taxi_columns.pickup_datetime = "tpep_pickup_datetime";
  options.taxi_columns.pickup_zone = "PU";
  options.taxi_columns.dropoff_zone = "DO";

  FlowTable trips = ingest_od_trips(tmp.file("t.csv"), reg, options, "taxi");
  CHECK(trips.total() == 2);  // trips, not passengers

  options.passenger_weighted = true;
  options.taxi_columns.passenger_count = "passengers";
  FlowTable pax = ingest_od_trips(tmp.file("t.csv"), reg, options, "taxi");
  CHECK(pax.total() == 4);
}

TEST_CASE("ingest_unit_flows: destination map fans out to zones") {
  TempDir tmp("dev");
  // X -> z1 (primary), Y -> z2, Z -> z1
  ZoneRegistry reg = build_registry({{"X", "z1", 1.0}, {"Y", "z2", 1.0}, {"Z", "z1", 1.0}});
  testutil::write(tmp.file("d.csv"),
                  "date,origin_census_block_group,destination_cbgs\n"
                  "2021-01-05,X,\"{\"\"Y\"\":5,\"\"Z\"\":2}\"\n");
  FlowTable t = ingest_unit_flows(tmp.file("d.csv"), reg, window_2021q1(), "device");
  CHECK(t.total() == 7);
  CHECK(t.cell(*reg.find_zone("z1"), *reg.find_zone("z2")) == 5);
  CHECK(t.cell(*reg.find_zone("z1"), *reg.find_zone("z1")) == 2);
  CHECK(t.rejects().accepted == 2);  // a record is one destination entry
}

TEST_CASE("ingest_unit_flows: spatial filter drops out-of-registry units") {
  TempDir tmp("dev");
  ZoneRegistry reg = build_registry({{"X", "z1", 1.0}, {"Y", "z2", 1.0}});
  IngestOptions options = window_2021q1();
  options.reject_threshold = 1.0;
  testutil::write(tmp.file("d.csv"),
                  "date,origin_census_block_group,destination_cbgs\n"
                  "2021-01-05,X,\"{\"\"Y\"\":5,\"\"NJ1\"\":9}\"\n"
                  "2021-01-05,NJ2,\"{\"\"Y\"\":3}\"\n");
  FlowTable t = ingest_unit_flows(tmp.file("d.csv"), reg, options, "device");
  CHECK(t.total() == 5);
  CHECK(t.rejects().reason_count("unknown-dest-unit") == 1);
  CHECK(t.rejects().reason_count("unknown-origin-unit") == 1);
  CHECK(t.rejects().accepted + t.rejects().rejected == 3);
}

TEST_CASE("ingest_unit_flows: include_self flag controls same-unit stays") {
  TempDir tmp("dev");
  ZoneRegistry reg = build_registry({{"X", "z1", 1.0}, {"Y", "z1", 1.0}});
  testutil::write(tmp.file("d.csv"),
                  "date,origin_census_block_group,destination_cbgs\n"
                  "2021-01-05,X,\"{\"\"X\"\":4,\"\"Y\"\":6}\"\n");

  IngestOptions options = window_2021q1();
  FlowTable with_self = ingest_unit_flows(tmp.file("d.csv"), reg, options, "device");
  CHECK(with_self.total() == 10);  // default keeps same-unit stays

  options.include_self = false;
  FlowTable without = ingest_unit_flows(tmp.file("d.csv"), reg, options, "device");
  CHECK(without.total() == 6);  // same-ZONE different-unit flows always count
  CHECK(without.rejects().reason_count("self-excluded") == 1);
}

TEST_CASE("ingest_unit_flows: malformed maps and negative counts") {
  TempDir tmp("dev");
  ZoneRegistry reg = build_registry({{"X", "z1", 1.0}, {"Y", "z2", 1.0}});
  IngestOptions options = window_2021q1();
  options.reject_threshold = 1.0;
  testutil::write(tmp.file("d.csv"),
                  "date,origin_census_block_group,destination_cbgs\n"
                  "2021-01-05,X,\"{not json\"\n"
                  "2021-01-05,X,\"{\"\"Y\"\":-3}\"\n"
                  "2021-01-05,X,\"{\"\"Y\"\":2}\"\n");
  FlowTable t = ingest_unit_flows(tmp.file("d.csv"), reg, options, "device");
  CHECK(t.total() == 2);
  CHECK(t.rejects().reason_count("bad-destination-map") == 1);
  CHECK(t.rejects().reason_count("negative-count") == 1);
}

TEST_CASE("load_device_panel: lookups, duplicates, negatives, empty") {
  TempDir tmp("panel");
  testutil::write(tmp.file("p.csv"),
                  "census_block_group,month,number_devices_residing,number_devices_primary_daytime\n"
                  "cbgA,2021-01,12,9\n"
                  "cbgA,2021-02,14,11\n");
  DevicePanel panel = load_device_panel(tmp.file("p.csv"));
  auto* counts = panel.find("cbgA", parse_month("2021-01"));
  REQUIRE(counts != nullptr);
  CHECK(counts->residing == 12.0);
  CHECK(counts->daytime == 9.0);
  CHECK(panel.find("cbgA", parse_month("2021-03")) == nullptr);

  // two months (10, 14) for a unit -> mean 12 over a 2-month window
  testutil::write(tmp.file("mean.csv"),
                  "census_block_group,month,number_devices_residing,number_devices_primary_daytime\n"
                  "u,2021-01,10,1\nu,2021-02,14,3\n");
  DevicePanel p2 = load_device_panel(tmp.file("mean.csv"));
  auto mean = p2.mean_over("u", parse_month_range("2021-01..2021-02"));
  CHECK(mean.residing == doctest::Approx(12.0));
  CHECK(mean.daytime == doctest::Approx(2.0));

  testutil::write(tmp.file("dup.csv"),
                  "census_block_group,month,number_devices_residing,number_devices_primary_daytime\n"
                  "cbgA,2021-01,12,9\ncbgA,2021-01,1,1\n");
  try {
    load_device_panel(tmp.file("dup.csv"));
    FAIL("expected duplicate-row");
  } catch (const DataError& e) {
    CHECK(e.kind() == "duplicate-row");
  }

  testutil::write(tmp.file("neg.csv"),
                  "census_block_group,month,number_devices_residing,number_devices_primary_daytime\n"
                  "cbgA,2021-01,-2,9\n");
  CHECK_THROWS_AS(load_device_panel(tmp.file("neg.csv")), DataError);

  testutil::write(tmp.file("empty.csv"),
                  "census_block_group,month,number_devices_residing,number_devices_primary_daytime\n");
  DevicePanel empty = load_device_panel(tmp.file("empty.csv"));
  CHECK(empty.empty());
  CHECK(!empty.any_month_in(parse_month_range("2021-01..2021-03")));
}

TEST_CASE("merge_flow_tables: identity, commutativity, associativity, mismatch") {
  FlowTable a("d", 5), b("d", 5), empty("d", 5);
  a.add(0, 1, 3);
  a.add(2, 2, 7);
  a.rejects().accepted = 10;
  b.add(0, 1, 1);
  b.add(4, 0, 2);
  b.rejects().reject("bad-date", "x");

  CHECK(merge_flow_tables(a, empty) == a);
  CHECK(merge_flow_tables(a, b) == merge_flow_tables(b, a));

  FlowTable c("d", 5);
  c.add(1, 1, 5);
  CHECK(merge_flow_tables(merge_flow_tables(a, b), c) ==
        merge_flow_tables(a, merge_flow_tables(b, c)));

  FlowTable other("x", 5);
  try {
    merge_flow_tables(a, other);
    FAIL("expected dataset-id-mismatch");
  } catch (const DataError& e) {
    CHECK(e.kind() == "dataset-id-mismatch");
  }
}

TEST_CASE("property: partitioned ingestion merged equals single pass") {
  TempDir tmp("part");
  const int zones = 6;
  ZoneRegistry reg = testutil::simple_registry(zones);
  rng::Stream rng(31337);
  std::vector<std::string> lines;
  for (int i = 0; i < 2000; ++i) {
    char line[64];
    std::snprintf(line, sizeof(line), "2021-0%d-%02d 12:00:00,z%03d,z%03d\n",
                  1 + (int)rng.next_below(3), 1 + (int)rng.next_below(28),
                  (int)rng.next_below(zones), (int)rng.next_below(zones));
    lines.emplace_back(line);
  }
  std::string whole = taxi_header();
  for (const auto& l : lines) whole += l;
  testutil::write(tmp.file("all.csv"), whole);

  IngestOptions options = window_2021q1();
  FlowTable single = ingest_od_trips(tmp.file("all.csv"), reg, options, "taxi");

  // 4-way partition, ingested separately, merged in arbitrary order
  std::vector<FlowTable> parts;
  for (int p = 0; p < 4; ++p) {
    std::string body = taxi_header();
    for (size_t i = p; i < lines.size(); i += 4) body += lines[i];
    std::string path = tmp.file("part" + std::to_string(p) + ".csv");
    testutil::write(path, body);
    parts.push_back(ingest_od_trips(path, reg, options, "taxi"));
  }
  FlowTable merged = merge_flow_tables(merge_flow_tables(parts[3], parts[1]),
                                       merge_flow_tables(parts[0], parts[2]));
  CHECK(merged == single);
}

TEST_CASE("per-day tables retained behind the flag") {
  TempDir tmp("perday");
  ZoneRegistry reg = testutil::simple_registry(4);
  testutil::write(tmp.file("t.csv"), taxi_header() +
                                         "2021-01-05 08:00:00,z001,z002\n"
                                         "2021-01-05 09:00:00,z001,z002\n"
                                         "2021-01-06 09:00:00,z001,z002\n");
  IngestOptions options = window_2021q1();
  FlowTable plain = ingest_od_trips(tmp.file("t.csv"), reg, options, "taxi");
  CHECK(!plain.has_by_day());

  options.per_day = true;
  FlowTable with_days = ingest_od_trips(tmp.file("t.csv"), reg, options, "taxi");
  REQUIRE(with_days.has_by_day());
  CHECK(with_days.by_day().size() == 2);
  CHECK(with_days.by_day().at(parse_date("2021-01-05")).at(FlowTable::pack(1, 2)) == 2);
  CHECK(with_days.total() == 3);  // aggregate unchanged
}

TEST_CASE("flow table csv round-trip") {
  TempDir tmp("ftcsv");
  ZoneRegistry reg = testutil::simple_registry(5);
  FlowTable t("taxi", 5);
  t.add(0, 1, 10);
  t.add(3, 3, 7);
  t.rejects().accepted = 2;
  write_flow_table_csv(tmp.file("f.csv"), t, reg);
  FlowTable back = load_flow_table_csv(tmp.file("f.csv"), reg, "taxi");
  CHECK(back == t);
}

TEST_CASE("unreadable file is fatal") {
  ZoneRegistry reg = testutil::simple_registry(3);
  try {
    ingest_od_trips("/does/not/exist.csv", reg, window_2021q1(), "taxi");
    FAIL("expected unreadable-file");
  } catch (const DataError& e) {
    CHECK(e.kind() == "unreadable-file");
  }
}
