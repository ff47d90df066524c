// Acceptance suite: one test case per criterion, one [PASS]/[FAIL] line each.
// Tolerances are pinned in the assertions, not configurable.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "odcmp/clustering.hpp"
#include "odcmp/compare.hpp"
#include "odcmp/dates.hpp"
#include "odcmp/ingest.hpp"
#include "odcmp/io.hpp"
#include "odcmp/pipeline.hpp"
#include "odcmp/rng.hpp"
#include "odcmp/synth.hpp"

using namespace odcmp;
using testutil::TempDir;

namespace {

struct Criterion {
  const char* name;
  bool passed = false;
  ~Criterion() { std::printf("[%s] %s\n", passed ? "PASS" : "FAIL", name); }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

long read_vm_hwm_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) return std::stol(line.substr(6));
  }
  return -1;
}

// Resets the kernel's peak-RSS watermark so VmHWM reflects only what follows.
bool reset_peak_rss() {
  std::ofstream out("/proc/self/clear_refs");
  if (!out) return false;
  out << "5";
  return (bool)out;
}

void write_random_taxi_file(const std::string& path, uint64_t rows, int zones, uint64_t seed) {
  rng::Stream rng(seed);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  std::fputs("pickup_datetime,PULocationID,DOLocationID\n", f);
  std::string buf;
  buf.reserve(9 << 20);
  char line[64];
  for (uint64_t i = 0; i < rows; ++i) {
    int day = 1 + (int)rng.next_below(28);
    int month = 1 + (int)rng.next_below(3);
    std::snprintf(line, sizeof(line), "2021-%02d-%02d 08:30:00,z%03d,z%03d\n", month, day,
                  (int)rng.next_below((uint64_t)zones), (int)rng.next_below((uint64_t)zones));
    buf += line;
    if (buf.size() > (8 << 20)) {
      std::fwrite(buf.data(), 1, buf.size(), f);
      buf.clear();
    }
  }
  std::fwrite(buf.data(), 1, buf.size(), f);
  std::fclose(f);
}

std::vector<std::vector<double>> load_matrix_csv(const std::string& path,
                                                 std::vector<std::string>& labels) {
  CsvFile file(path);
  labels.assign(file.header().begin() + 1, file.header().end());
  std::vector<std::vector<double>> rows;
  CsvRow row;
  while (file.next(row)) {
    std::vector<double> values;
    for (size_t i = 1; i < row.fields.size(); ++i) {
      double v = std::nan("");
      if (!row.fields[i].empty()) REQUIRE(parse_double(row.fields[i], v));
      values.push_back(v);
    }
    rows.push_back(std::move(values));
  }
  return rows;
}

}  // namespace

TEST_CASE("criterion 1: Table 2 sampling-rate fixture within 0.005 pp, under 1 s") {
  Criterion c{"criterion 1: Table 2 sampling rates reproduced within 0.005 pp in < 1 s"};
  auto start = std::chrono::steady_clock::now();

  const std::string dir = ODCMP_FIXTURES_DIR "/table2/";
  ZoneRegistry reg = load_crosswalk(dir + "crosswalk.csv");
  FeatureTable features =
      aggregate_features(reg, load_unit_features(dir + "features.csv", dir + "features_schema.csv"));
  ClusterAssignment assignment = load_clusters_csv(dir + "clusters.csv", reg);
  DevicePanel panel = load_device_panel(dir + "panel.csv");
  SamplingRateTable rates = sampling_rate(panel, cluster_populations(features, assignment),
                                          assignment, reg, parse_month_range("2021-01..2021-03"));

  const double night[5] = {11.55, 6.45, 5.79, 4.45, 5.55};
  const double day[5] = {11.92, 3.19, 3.75, 2.82, 2.92};
  REQUIRE(rates.labels.size() == 5);
  for (size_t i = 0; i < 5; ++i) {
    CHECK(std::fabs(rates.rate_night_pct[i] - night[i]) <= 0.005);
    CHECK(std::fabs(rates.rate_day_pct[i] - day[i]) <= 0.005);
  }
  CHECK(seconds_since(start) < 1.0);
  c.passed = true;
}

TEST_CASE("criterion 2: RF share fixtures within 0.01 pp") {
  Criterion c{"criterion 2: RF shares 26.67% and 28.08% reproduced within 0.01 pp"};

  ClusterODMatrix taxi;
  taxi.labels = {"C0", "rest"};
  taxi.cells = {142988133, 0, 0, 536264515 - 142988133};
  taxi.row_margin = {142988133, 536264515 - 142988133};
  taxi.col_margin = taxi.row_margin;
  taxi.grand_total = 536264515;
  CHECK(std::fabs(relative_frequency(taxi).at(0, 0) * 100.0 - 26.67) <= 0.01);

  ClusterODMatrix device;
  device.labels = {"C4", "rest"};
  device.cells = {169034882, 0, 0, 601916751 - 169034882};
  device.row_margin = {169034882, 601916751 - 169034882};
  device.col_margin = device.row_margin;
  device.grand_total = 601916751;
  CHECK(std::fabs(relative_frequency(device).at(0, 0) * 100.0 - 28.08) <= 0.01);
  c.passed = true;
}

TEST_CASE("criterion 10: Pearson fixtures") {
  Criterion c{"criterion 10: pearson r(x,2x)=1, r(x,-x+7)=-1, r((1,2,3),(2,1,4))=0.65465"};
  std::vector<double> x = {1, 2, 3};
  std::vector<double> double_x = {2, 4, 6};
  std::vector<double> flipped = {6, 5, 4};
  std::vector<double> y = {2, 1, 4};
  CHECK(pearson(x, double_x) == 1.0);
  CHECK(pearson(x, flipped) == -1.0);
  CHECK(std::fabs(pearson(x, y) - 0.65465) <= 1e-4);
  c.passed = true;
}

TEST_CASE("criterion 3: LRFR algebra over 1000 random matrix pairs") {
  Criterion c{"criterion 3: 2^lrfr=rfr (1e-9), antisymmetry (1e-12), sum RF=1 (1e-12), sign duality"};
  rng::Stream rng(987654321);
  int checked_cells = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 2 + rng.next_below(7);
    auto make = [&]() {
      ClusterODMatrix m;
      for (size_t i = 0; i < n; ++i) m.labels.push_back("C" + std::to_string(i));
      m.cells.resize(n * n);
      for (auto& cell : m.cells) cell = rng.bernoulli(0.1) ? 0 : 1 + rng.next_below(1000000);
      m.row_margin.assign(n, 0);
      m.col_margin.assign(n, 0);
      m.grand_total = 0;
      for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
          m.row_margin[i] += m.cells[i * n + j];
          m.col_margin[j] += m.cells[i * n + j];
          m.grand_total += m.cells[i * n + j];
        }
      }
      if (m.grand_total == 0) m.cells[0] = m.row_margin[0] = m.col_margin[0] = m.grand_total = 1;
      return m;
    };
    ClusterODMatrix a = make(), b = make();
    RFMatrix rf_a = relative_frequency(a), rf_b = relative_frequency(b);

    double sum = std::accumulate(rf_a.values.begin(), rf_a.values.end(), 0.0);
    REQUIRE(std::fabs(sum - 1.0) <= 1e-12);
    for (double v : rf_a.values) REQUIRE((v >= 0.0 && v <= 1.0));

    RatioMatrix r_ab = rfr(rf_a, rf_b, 0.0);
    RatioMatrix r_ba = rfr(rf_b, rf_a, 0.0);
    LrfrMatrix l_ab = lrfr(r_ab, rf_a, rf_b);
    LrfrMatrix l_ba = lrfr(r_ba, rf_b, rf_a);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        if (!l_ab.defined(i, j)) continue;
        ++checked_cells;
        REQUIRE(std::fabs(std::pow(2.0, l_ab.at(i, j)) - r_ab.at(i, j)) <= 1e-9);
        REQUIRE(l_ba.defined(i, j));
        REQUIRE(std::fabs(l_ab.at(i, j) + l_ba.at(i, j)) <= 1e-12);
        REQUIRE((r_ab.at(i, j) > 1.0) == (l_ab.at(i, j) > 0.0));
      }
    }
  }
  CHECK(checked_cells > 10000);
  c.passed = true;
}

TEST_CASE("criterion 4: scale invariance for c in {2, 10, 1000}") {
  Criterion c{"criterion 4: scaling one dataset by 2/10/1000 moves no LRFR cell by > 1e-9"};
  rng::Stream rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const size_t n = 2 + rng.next_below(6);
    FlowTable base("a", (uint32_t)n), other("b", (uint32_t)n);
    for (uint32_t i = 0; i < n; ++i) {
      for (uint32_t j = 0; j < n; ++j) {
        base.add(i, j, 1 + rng.next_below(5000));
        other.add(i, j, 1 + rng.next_below(5000));
      }
    }
    ClusterAssignment identity;
    identity.k = (int)n;
    identity.labels.resize(n);
    std::iota(identity.labels.begin(), identity.labels.end(), 0);

    RFMatrix rf_b = relative_frequency(build_cluster_matrix(other, identity));
    RFMatrix rf_a = relative_frequency(build_cluster_matrix(base, identity));
    LrfrMatrix reference = lrfr(rfr(rf_a, rf_b, 0.0), rf_a, rf_b);

    for (uint64_t scale : {2ull, 10ull, 1000ull}) {
      FlowTable scaled("a", (uint32_t)n);
      for (const auto& cell : base.sorted_cells()) {
        scaled.add(cell.origin, cell.dest, cell.count * scale);
      }
      RFMatrix rf_s = relative_frequency(build_cluster_matrix(scaled, identity));
      LrfrMatrix lr = lrfr(rfr(rf_s, rf_b, 0.0), rf_s, rf_b);
      for (size_t idx = 0; idx < lr.values.size(); ++idx) {
        REQUIRE(std::fabs(lr.values[idx] - reference.values[idx]) <= 1e-9);
      }
    }
  }
  c.passed = true;
}

TEST_CASE("criterion 5: aggregation equivalence on 100 random instances") {
  Criterion c{"criterion 5: zone-level collapse equals direct cluster build, exact, 100 instances"};
  rng::Stream rng(5150);
  for (int trial = 0; trial < 100; ++trial) {
    const int zones = 3 + (int)rng.next_below(40);
    ZoneRegistry reg = testutil::simple_registry(zones);
    FlowTable flows("x", (uint32_t)zones);
    const int cells = 1 + (int)rng.next_below(120);
    for (int i = 0; i < cells; ++i) {
      flows.add((uint32_t)rng.next_below((uint64_t)zones),
                (uint32_t)rng.next_below((uint64_t)zones), 1 + rng.next_below(100000));
    }
    const int k = 1 + (int)rng.next_below(6);
    ClusterAssignment assignment;
    assignment.k = k;
    assignment.labels.resize(zones);
    bool has_undef = false;
    for (auto& l : assignment.labels) {
      if (rng.bernoulli(0.1)) {
        l = ClusterAssignment::kUndefined;
        has_undef = true;
      } else {
        l = (int)rng.next_below((uint64_t)k);
      }
    }

    ClusterODMatrix direct = build_cluster_matrix(flows, assignment);
    std::vector<int> group(zones);
    for (int z = 0; z < zones; ++z) {
      group[z] = assignment.labels[z] == ClusterAssignment::kUndefined ? k : assignment.labels[z];
    }
    std::vector<std::string> labels;
    for (int cl = 0; cl < k; ++cl) labels.push_back("C" + std::to_string(cl));
    if (has_undef) labels.push_back("UNDEFINED");
    ClusterODMatrix collapsed = collapse_matrix(build_zone_matrix(flows, reg), group, labels);

    REQUIRE(collapsed.cells == direct.cells);
    REQUIRE(collapsed.row_margin == direct.row_margin);
    REQUIRE(collapsed.col_margin == direct.col_margin);
    REQUIRE(collapsed.grand_total == direct.grand_total);
  }
  c.passed = true;
}

TEST_CASE("criterion 8: small-instance k-means optimality, 200 instances") {
  Criterion c{"criterion 8: WCSS equals exhaustive optimum on >= 99% of 200 random 6-point k=2 runs"};
  rng::Stream rng(8091);
  int optimal = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 6, d = 2;
    std::vector<double> pts(n * d);
    for (auto& p : pts) p = rng.next_double() * 20.0 - 10.0;
    double oracle = testutil::brute_force_wcss(pts, n, d, 2);

    ZScoreTable z;
    z.variables = {"x", "y"};
    for (size_t i = 0; i < n; ++i) {
      z.zone_ids.push_back(testutil::zone_id((int)i));
      z.zone_index.push_back((uint32_t)i);
    }
    z.values = pts;
    z.column_stats.assign(d, {});

    KmeansOptions options;
    options.restarts = 20;
    double got = kmeans(z, 2, rng.next_u64(), options).model.wcss;
    REQUIRE(got >= oracle - 1e-9);  // never better than the true optimum
    if (got <= oracle * (1.0 + 1e-9) + 1e-12) ++optimal;
  }
  CHECK(optimal >= 198);  // >= 99%
  c.passed = true;
}

TEST_CASE("criterion 9: 10M records under 60 s, peak memory under 512 MB, 300 zones") {
  Criterion c{"criterion 9: 10M records ingested < 60 s with peak RSS < 512 MB at 300 zones"};
  TempDir tmp("throughput");
  const std::string path = tmp.file("big.csv");
  write_random_taxi_file(path, 10000000, 300, 20240810);

  ZoneRegistry reg = testutil::simple_registry(300);
  IngestOptions options;
  options.window = parse_date_range("2021-01-01..2021-03-31");
  options.workers = 4;

  bool rss_reset = reset_peak_rss();
  auto start = std::chrono::steady_clock::now();
  FlowTable table = ingest_od_trips(path, reg, options, "big");
  double elapsed = seconds_since(start);
  long peak_kb = read_vm_hwm_kb();

  CHECK(table.total() == 10000000);
  CHECK(elapsed < 60.0);
  REQUIRE(peak_kb > 0);
  CHECK(peak_kb < 512 * 1024);
  std::printf("  (ingested 10M records in %.2f s, peak RSS %.1f MB%s)\n", elapsed,
              peak_kb / 1024.0, rss_reset ? "" : ", process-lifetime watermark");
  c.passed = true;
}

TEST_CASE("criterion 6: ingestion determinism across worker counts and record order") {
  Criterion c{"criterion 6: 1M records, workers {1,2,4,8} and shuffled order, bit-identical tables"};
  TempDir tmp("determinism");
  const std::string path = tmp.file("trips.csv");
  write_random_taxi_file(path, 1000000, 300, 77001);

  ZoneRegistry reg = testutil::simple_registry(300);
  IngestOptions options;
  options.window = parse_date_range("2021-01-01..2021-03-31");

  options.workers = 1;
  FlowTable reference = ingest_od_trips(path, reg, options, "det");
  CHECK(reference.total() == 1000000);
  for (int workers : {2, 4, 8}) {
    options.workers = workers;
    REQUIRE(ingest_od_trips(path, reg, options, "det") == reference);
  }

  // shuffle record order (header stays put)
  std::string content = testutil::slurp(path);
  size_t header_end = content.find('\n') + 1;
  std::vector<std::string_view> lines;
  std::string_view body = std::string_view(content).substr(header_end);
  size_t pos = 0;
  while (pos < body.size()) {
    size_t end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    lines.push_back(body.substr(pos, end - pos));
    pos = end + 1;
  }
  rng::Stream rng(4242);
  for (size_t i = lines.size() - 1; i > 0; --i) {
    std::swap(lines[i], lines[rng.next_below(i + 1)]);
  }
  {
    std::ofstream out(tmp.file("shuffled.csv"), std::ios::binary);
    out << content.substr(0, header_end);
    for (auto line : lines) out << line << '\n';
  }
  for (int workers : {1, 4}) {
    options.workers = workers;
    REQUIRE(ingest_od_trips(tmp.file("shuffled.csv"), reg, options, "det") == reference);
  }
  c.passed = true;
}

TEST_CASE("criterion 7: synthetic end-to-end with planted biases, under 2 minutes") {
  Criterion c{
      "criterion 7: elbow k=5, ARI >= 0.95, LRFR within 0.1 of oracle on >= 95% of strong cells"};
  auto start = std::chrono::steady_clock::now();
  TempDir tmp("e2e");

  nlohmann::json spec;
  spec["n_zones"] = 60;
  spec["n_undefined"] = 3;
  spec["k_true"] = 5;
  spec["seed"] = 90210;
  spec["population"] = {50000, 150000};
  spec["total_trips"] = 3200000;
  spec["distance_decay"] = 0.8;
  spec["window"] = {{"start", "2021-01-01"}, {"end", "2021-03-31"}};
  spec["bias"] = {{"ratios", {0.25, 0.5, 1.0, 2.0, 4.0}}};  // capture ratios span [1/4, 4]
  testutil::write(tmp.file("synth.json"), spec.dump());
  run_synth(tmp.file("synth.json"), tmp.dir() + "/city");

  // planted separation is >= 10x noise by construction; verify from the meta
  nlohmann::json meta = nlohmann::json::parse(testutil::slurp(tmp.dir() + "/city/truth/meta.json"));
  CHECK(meta["separation_ratio"].get<double>() >= 10.0);
  REQUIRE(meta["total_trips_a"].get<uint64_t>() >= 1000000);  // >= 1e6 per observed dataset
  REQUIRE(meta["total_trips_b"].get<uint64_t>() >= 1000000);

  PipelineConfig config = load_pipeline_config(tmp.dir() + "/city/pipeline_config.json");
  REQUIRE(!config.k.has_value());  // elbow over k_range [2,8]
  run_all(config);

  // elbow selected the planted k
  nlohmann::json report = nlohmann::json::parse(testutil::slurp(config.out + "/report.json"));
  CHECK(report["metadata"]["k"] == 5);

  // ARI of recovered labels vs planted truth over defined zones
  ZoneRegistry reg = load_crosswalk(config.crosswalk, config.zones);
  ClusterAssignment found = load_clusters_csv(config.out + "/clusters.csv", reg);
  ClusterAssignment truth = load_clusters_csv(tmp.dir() + "/city/truth/true_clusters.csv", reg);
  std::vector<int> tv, fv;
  for (uint32_t z = 0; z < reg.zone_count(); ++z) {
    if (truth.labels[z] == ClusterAssignment::kUndefined) continue;
    tv.push_back(truth.labels[z]);
    fv.push_back(found.labels[z]);
  }
  double ari = testutil::adjusted_rand_index(tv, fv);
  CHECK(ari >= 0.95);

  // map true labels -> recovered labels by overlap (must be a bijection here)
  std::map<std::pair<int, int>, int> contingency;
  for (size_t i = 0; i < tv.size(); ++i) contingency[{tv[i], fv[i]}] += 1;
  std::vector<int> true_to_found(6, -1);
  for (int t = 0; t < 5; ++t) {
    int best = -1, best_count = -1;
    for (int f = 0; f < 5; ++f) {
      auto it = contingency.find({t, f});
      int count = it == contingency.end() ? 0 : it->second;
      if (count > best_count) {
        best_count = count;
        best = f;
      }
    }
    true_to_found[t] = best;
  }
  true_to_found[5] = 5;  // UNDEFINED row maps to itself
  std::vector<bool> used(6, false);
  for (int t = 0; t < 6; ++t) {
    REQUIRE(!used[true_to_found[t]]);
    used[true_to_found[t]] = true;
  }

  // measured LRFR (recovered labels) vs closed-form oracle (true labels)
  std::vector<std::string> expected_labels;
  auto expected = load_matrix_csv(tmp.dir() + "/city/truth/expected_lrfr.csv", expected_labels);
  REQUIRE(expected_labels.size() == 6);
  auto measured = report["lrfr"];
  int strong = 0, within = 0;
  for (int ti = 0; ti < 6; ++ti) {
    for (int tj = 0; tj < 6; ++tj) {
      double want = expected[ti][tj];
      if (std::fabs(want) < 0.5) continue;
      ++strong;
      auto cell = measured[true_to_found[ti]][true_to_found[tj]];
      if (cell.is_null()) continue;
      if (std::fabs(cell.get<double>() - want) <= 0.1) ++within;
    }
  }
  REQUIRE(strong > 0);
  CHECK((double)within / (double)strong >= 0.95);

  double elapsed = seconds_since(start);
  CHECK(elapsed < 120.0);
  std::printf("  (e2e: ARI %.3f, %d/%d strong LRFR cells within 0.1, %.1f s)\n", ari, within,
              strong, elapsed);
  c.passed = true;
}
