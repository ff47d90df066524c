// Benchmark comparing the OpenMP ingestion/clustering kernels against their
// serial reference paths on generated data. Not part of the test suite.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "odcmp/clustering.hpp"
#include "odcmp/crosswalk.hpp"
#include "odcmp/dates.hpp"
#include "odcmp/ingest.hpp"
#include "odcmp/io.hpp"
#include "odcmp/rng.hpp"

using namespace odcmp;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ZoneRegistry make_registry(int zones) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (int z = 0; z < zones; ++z) {
    char zid[16], uid[16];
    std::snprintf(zid, sizeof(zid), "z%03d", z);
    std::snprintf(uid, sizeof(uid), "u%03d", z);
    rows.emplace_back(uid, zid, 1.0);
  }
  return build_registry(rows);
}

std::string write_taxi_file(const std::string& path, uint64_t rows, int zones, uint64_t seed) {
  rng::Stream rng(seed);
  std::string out;
  out.reserve(64 << 20);
  out += "pickup_datetime,PULocationID,DOLocationID\n";
  char line[64];
  for (uint64_t i = 0; i < rows; ++i) {
    int day = (int)rng.next_below(90) + 1;
    int o = (int)rng.next_below((uint64_t)zones);
    int d = (int)rng.next_below((uint64_t)zones);
    std::snprintf(line, sizeof(line), "2021-%02d-%02d 08:15:00,z%03d,z%03d\n", (day - 1) / 30 + 1,
                  (day - 1) % 30 + 1, o, d);
    out += line;
    if (out.size() > (63 << 20)) {
      std::FILE* f = std::fopen(path.c_str(), "ab");
      std::fwrite(out.data(), 1, out.size(), f);
      std::fclose(f);
      out.clear();
    }
  }
  std::FILE* f = std::fopen(path.c_str(), "ab");
  std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);
  return path;
}

void bench_ingest(uint64_t rows, int zones) {
  std::printf("== ingest: %llu taxi rows over %d zones ==\n", (unsigned long long)rows, zones);
  ZoneRegistry registry = make_registry(zones);
  const std::string path = "bench_taxi.csv";
  std::remove(path.c_str());
  write_taxi_file(path, rows, zones, 42);

  IngestOptions options;
  options.window = parse_date_range("2021-01-01..2021-12-31");

  auto t0 = std::chrono::steady_clock::now();
  FlowTable serial = ingest_od_trips_serial(path, registry, options, "bench");
  double serial_s = seconds_since(t0);
  std::printf("  serial reference       %7.2fs  (%.1f Mrec/s)\n", serial_s,
              (double)rows / serial_s / 1e6);

  for (int workers : {1, 2, 4, 8}) {
    options.workers = workers;
    t0 = std::chrono::steady_clock::now();
    FlowTable parallel = ingest_od_trips(path, registry, options, "bench");
    double par_s = seconds_since(t0);
    std::printf("  openmp workers=%d       %7.2fs  (%.1f Mrec/s)  speedup %.2fx  identical=%s\n",
                workers, par_s, (double)rows / par_s / 1e6, serial_s / par_s,
                parallel == serial ? "yes" : "NO");
  }
  std::remove(path.c_str());
}

ZScoreTable make_points(size_t n, size_t dims, int blobs, uint64_t seed) {
  rng::Stream rng(seed);
  ZScoreTable z;
  for (size_t v = 0; v < dims; ++v) z.variables.push_back("v" + std::to_string(v));
  std::vector<std::vector<double>> centers(blobs, std::vector<double>(dims));
  for (auto& c : centers) {
    for (auto& x : c) x = rng.bernoulli(0.5) ? 2.0 : -2.0;
  }
  z.values.resize(n * dims);
  for (size_t i = 0; i < n; ++i) {
    char zid[16];
    std::snprintf(zid, sizeof(zid), "p%06zu", i);
    z.zone_ids.push_back(zid);
    z.zone_index.push_back((uint32_t)i);
    const auto& c = centers[i % blobs];
    for (size_t v = 0; v < dims; ++v) z.values[i * dims + v] = c[v] + 0.3 * rng.normal();
  }
  return z;
}

void bench_kmeans(size_t n, size_t dims, int k, int restarts) {
  std::printf("== kmeans: %zu points, %zu dims, k=%d, %d restarts ==\n", n, dims, k, restarts);
  ZScoreTable z = make_points(n, dims, k, 7);

  KmeansOptions options;
  options.restarts = restarts;
  options.threads = 1;
  auto t0 = std::chrono::steady_clock::now();
  KmeansResult serial = kmeans(z, k, 1234, options);
  double serial_s = seconds_since(t0);
  std::printf("  threads=1              %7.2fs  (wcss %.3f)\n", serial_s, serial.model.wcss);

  for (int threads : {2, 4, 8}) {
    options.threads = threads;
    t0 = std::chrono::steady_clock::now();
    KmeansResult parallel = kmeans(z, k, 1234, options);
    double par_s = seconds_since(t0);
    std::printf("  threads=%d              %7.2fs  speedup %.2fx  identical=%s\n", threads, par_s,
                serial_s / par_s,
                parallel.model.wcss == serial.model.wcss &&
                        parallel.assignment.labels == serial.assignment.labels
                    ? "yes"
                    : "NO");
  }
}

}  // namespace

int main(int argc, char** argv) {
  uint64_t rows = argc > 1 ? std::stoull(argv[1]) : 2000000;
  bench_ingest(rows, 300);
  bench_kmeans(20000, 27, 5, 20);
  return 0;
}
