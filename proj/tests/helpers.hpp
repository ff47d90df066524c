#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "odcmp/clustering.hpp"
#include "odcmp/crosswalk.hpp"
#include "odcmp/rng.hpp"

namespace testutil {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("odcmp_" + tag + "_" + unique());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  static std::string unique() {
    static int counter = 0;
    return std::to_string(::getpid()) + "_" + std::to_string(counter++);
  }
  std::filesystem::path path_;
};

inline void write(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// 1:1 registry z000..z(n-1) with units u000..
inline odcmp::ZoneRegistry simple_registry(int zones) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (int z = 0; z < zones; ++z) {
    char zid[16], uid[16];
    std::snprintf(zid, sizeof(zid), "z%03d", z);
    std::snprintf(uid, sizeof(uid), "u%03d", z);
    rows.emplace_back(uid, zid, 1.0);
  }
  return odcmp::build_registry(rows);
}

inline std::string zone_id(int z) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "z%03d", z);
  return buf;
}

// Adjusted Rand index between two labelings of equal length.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  auto comb2 = [](double n) { return n * (n - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ca, cb;
  for (size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (auto& [k, v] : joint) sum_joint += comb2(v);
  for (auto& [k, v] : ca) sum_a += comb2(v);
  for (auto& [k, v] : cb) sum_b += comb2(v);
  double total = comb2((double)a.size());
  double expected = sum_a * sum_b / total;
  double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

// Exhaustive-optimum WCSS over all assignments of n points to k non-empty
// clusters (the independent oracle for small k-means instances).
inline double brute_force_wcss(const std::vector<double>& points, size_t n, size_t d, int k) {
  std::vector<int> assign(n, 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> centroid(k * d);
  std::vector<int> count(k);
  for (;;) {
    // evaluate current assignment if every cluster is populated
    std::fill(count.begin(), count.end(), 0);
    for (size_t i = 0; i < n; ++i) count[assign[i]] += 1;
    bool full = true;
    for (int c = 0; c < k; ++c) full = full && count[c] > 0;
    if (full) {
      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < d; ++j) centroid[assign[i] * d + j] += points[i * d + j];
      }
      for (int c = 0; c < k; ++c) {
        for (size_t j = 0; j < d; ++j) centroid[c * d + j] /= count[c];
      }
      double wcss = 0;
      for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < d; ++j) {
          double diff = points[i * d + j] - centroid[assign[i] * d + j];
          wcss += diff * diff;
        }
      }
      best = std::min(best, wcss);
    }
    // next assignment in base-k counting order
    size_t pos = 0;
    while (pos < n && assign[pos] == k - 1) assign[pos++] = 0;
    if (pos == n) break;
    assign[pos] += 1;
  }
  return best;
}

}  // namespace testutil
