#include "odcmp/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "odcmp/error.hpp"
#include "odcmp/io.hpp"
#include "odcmp/rng.hpp"

namespace odcmp {

const std::vector<std::string> kCommuteModeVariables = {
    "comDriveAlone", "comCarpool",    "comPublicTransit", "comWFH",
    "comTaxi",       "comMotorcycle", "comBikeWalk"};

ZScoreTable standardize(const FeatureTable& features, const ZoneRegistry& registry,
                        std::vector<std::string> variables) {
  if (variables.empty()) {
    for (size_t i = 0; i < features.variables.size(); ++i) {
      if (features.kinds[i] == ColumnKind::kPercent || features.kinds[i] == ColumnKind::kLevel) {
        variables.push_back(features.variables[i]);
      }
    }
  }
  if (variables.empty()) throw DataError("missing-column", "no variables to standardize");

  ZScoreTable z;
  z.variables = std::move(variables);
  std::vector<int> src(z.variables.size());
  for (size_t i = 0; i < z.variables.size(); ++i) {
    src[i] = features.variable_index(z.variables[i]);
    if (src[i] < 0) throw DataError("missing-column", "variable '" + z.variables[i] + "' absent");
  }

  for (uint32_t zone = 0; zone < registry.zone_count(); ++zone) {
    if (features.is_defined(zone)) {
      z.zone_ids.push_back(registry.zone_id(zone));
      z.zone_index.push_back(zone);
    }
  }
  const size_t n = z.zone_ids.size();
  if (n < 2) throw DataError("too-few-zones", "need at least 2 defined zones to standardize");

  const size_t d = z.variables.size();
  z.values.resize(n * d);
  z.column_stats.resize(d);
  for (size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (size_t r = 0; r < n; ++r) mean += features.at(z.zone_index[r], (size_t)src[c]);
    mean /= (double)n;
    double var = 0.0;
    for (size_t r = 0; r < n; ++r) {
      double dev = features.at(z.zone_index[r], (size_t)src[c]) - mean;
      var += dev * dev;
    }
    var /= (double)n;  // population variance
    double sd = std::sqrt(var);
    auto& stats = z.column_stats[c];
    stats.mean = mean;
    stats.stddev = sd;
    stats.zero_variance = sd == 0.0;
    for (size_t r = 0; r < n; ++r) {
      double x = features.at(z.zone_index[r], (size_t)src[c]);
      z.values[r * d + c] = stats.zero_variance ? 0.0 : (x - mean) / sd;
    }
  }
  return z;
}

std::string cluster_label_string(int label) {
  if (label == ClusterAssignment::kUndefined) return "UNDEFINED";
  return "C" + std::to_string(label);
}

int parse_cluster_label(std::string_view s) {
  if (s == "UNDEFINED") return ClusterAssignment::kUndefined;
  if (s.size() >= 2 && s[0] == 'C') {
    int64_t v;
    if (parse_i64(s.substr(1), v) && v >= 0) return (int)v;
  }
  throw DataError("bad-label", "cannot parse cluster label '" + std::string(s) + "'");
}

namespace {

double dist2(const double* a, const double* b, size_t d) {
  double s = 0.0;
  for (size_t i = 0; i < d; ++i) {
    double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

struct LloydRun {
  double wcss = std::numeric_limits<double>::infinity();
  std::vector<int> labels;      // per z-table row
  std::vector<double> centroids;
};

int resolve_threads(int requested) {
#ifdef _OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

// One seeded k-means++ / Lloyd run. All loops visit points in row order so a
// run is a pure function of (table, k, seed).
LloydRun lloyd_run(const ZScoreTable& table, int k, uint64_t seed, int max_iterations,
                   int point_threads) {
  const size_t n = table.row_count();
  const size_t d = table.variables.size();
  const double* pts = table.values.data();
  rng::Stream rng(seed);

  LloydRun run;
  run.centroids.resize((size_t)k * d);

  // k-means++ seeding
  std::vector<double> min_d2(n);
  {
    size_t first = rng.next_below(n);
    std::copy(pts + first * d, pts + (first + 1) * d, run.centroids.begin());
    for (size_t i = 0; i < n; ++i) min_d2[i] = dist2(pts + i * d, run.centroids.data(), d);
    for (int c = 1; c < k; ++c) {
      double total = std::accumulate(min_d2.begin(), min_d2.end(), 0.0);
      size_t pick;
      if (total > 0.0) {
        double r = rng.next_double() * total;
        double acc = 0.0;
        pick = n - 1;
        for (size_t i = 0; i < n; ++i) {
          acc += min_d2[i];
          if (acc >= r) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.next_below(n);  // all remaining points coincide
      }
      double* cent = run.centroids.data() + (size_t)c * d;
      std::copy(pts + pick * d, pts + (pick + 1) * d, cent);
      for (size_t i = 0; i < n; ++i) min_d2[i] = std::min(min_d2[i], dist2(pts + i * d, cent, d));
    }
  }

  auto assign = [&](std::vector<int>& labels) {
    const double* cents = run.centroids.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(point_threads) if (point_threads > 1)
#endif
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = dist2(pts + i * d, cents, d);
      for (int c = 1; c < k; ++c) {
        double dd = dist2(pts + i * d, cents + (size_t)c * d, d);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      labels[i] = best;
    }
  };

  run.labels.assign(n, 0);
  assign(run.labels);

  std::vector<int> next(n);
  std::vector<size_t> counts(k);
  for (int iter = 0; iter < max_iterations; ++iter) {
    // update step: means of current members, serial in point order
    std::fill(run.centroids.begin(), run.centroids.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (size_t i = 0; i < n; ++i) {
      int c = run.labels[i];
      counts[c] += 1;
      double* cent = run.centroids.data() + (size_t)c * d;
      for (size_t j = 0; j < d; ++j) cent[j] += pts[i * d + j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      double* cent = run.centroids.data() + (size_t)c * d;
      for (size_t j = 0; j < d; ++j) cent[j] /= (double)counts[c];
    }
    // empty-cluster repair: reseed from the point farthest from its centroid
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      size_t far = 0;
      double far_d = -1.0;
      for (size_t i = 0; i < n; ++i) {
        if (counts[run.labels[i]] <= 1) continue;  // keep donors nonempty
        double dd = dist2(pts + i * d, run.centroids.data() + (size_t)run.labels[i] * d, d);
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      double* cent = run.centroids.data() + (size_t)c * d;
      std::copy(pts + far * d, pts + (far + 1) * d, cent);
      counts[run.labels[far]] -= 1;
      run.labels[far] = c;
      counts[c] = 1;
    }

    assign(next);
    if (next == run.labels) break;
    run.labels.swap(next);
  }

  run.wcss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    run.wcss += dist2(pts + i * d, run.centroids.data() + (size_t)run.labels[i] * d, d);
  }
  return run;
}

}  // namespace

KmeansResult kmeans(const ZScoreTable& table, int k, uint64_t seed, const KmeansOptions& options) {
  const size_t n = table.row_count();
  const size_t d = table.variables.size();
  if (n == 0 || d == 0) throw DataError("empty-feature-table", "nothing to cluster");
  if (k < 1 || (size_t)k > n) {
    throw DataError("k-out-of-range",
                    "k=" + std::to_string(k) + " with " + std::to_string(n) + " defined zones");
  }
  const int restarts = std::max(1, options.restarts);
  const int threads = resolve_threads(options.threads);
  // restarts fan out across threads; a lone restart parallelizes its
  // assignment loop instead (either way results match the serial run)
  const bool parallel_restarts = restarts > 1 && threads > 1;
  const int point_threads = parallel_restarts ? 1 : threads;

  std::vector<LloydRun> runs(restarts);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (parallel_restarts)
#endif
  for (int r = 0; r < restarts; ++r) {
    runs[r] = lloyd_run(table, k, rng::derive_seed(seed, (uint64_t)r), options.max_iterations,
                        point_threads);
  }

  int best = 0;
  for (int r = 1; r < restarts; ++r) {
    if (runs[r].wcss < runs[best].wcss) best = r;  // ties keep the lowest index
  }
  LloydRun& win = runs[best];

  // canonical relabeling: descending member count, ties by lexicographically
  // smallest member zone id (so row order cannot leak into the labels)
  std::vector<size_t> count(k, 0);
  std::vector<const std::string*> min_zone(k, nullptr);
  for (size_t i = 0; i < n; ++i) {
    int c = win.labels[i];
    count[c] += 1;
    if (!min_zone[c] || table.zone_ids[i] < *min_zone[c]) min_zone[c] = &table.zone_ids[i];
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  // degenerate inputs (all points identical) can leave clusters empty
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (count[a] != count[b]) return count[a] > count[b];
    if (min_zone[a] && min_zone[b]) return *min_zone[a] < *min_zone[b];
    if (min_zone[a] != min_zone[b]) return min_zone[a] != nullptr;
    return a < b;
  });
  std::vector<int> relabel(k);
  for (int i = 0; i < k; ++i) relabel[order[i]] = i;

  KmeansResult result;
  result.model.k = k;
  result.model.n_vars = d;
  result.model.seed = seed;
  result.model.restarts = restarts;
  result.model.wcss = win.wcss;
  result.model.centroids.resize((size_t)k * d);
  for (int c = 0; c < k; ++c) {
    std::copy(win.centroids.begin() + (size_t)order[c] * d,
              win.centroids.begin() + (size_t)(order[c] + 1) * d,
              result.model.centroids.begin() + (size_t)c * d);
  }

  size_t zone_count = 0;
  for (uint32_t z : table.zone_index) zone_count = std::max(zone_count, (size_t)z + 1);
  result.assignment.k = k;
  result.assignment.labels.assign(zone_count, ClusterAssignment::kUnassigned);
  for (size_t i = 0; i < n; ++i) {
    result.assignment.labels[table.zone_index[i]] = relabel[win.labels[i]];
  }
  return result;
}

ElbowResult select_k_elbow(const ZScoreTable& table, int k_min, int k_max, uint64_t seed,
                           const KmeansOptions& options, double floor) {
  if (k_min < 1 || k_max < k_min || (size_t)k_max > table.row_count()) {
    throw DataError("degenerate-range", "k range [" + std::to_string(k_min) + "," +
                                            std::to_string(k_max) + "] with " +
                                            std::to_string(table.row_count()) + " defined zones");
  }
  ElbowResult result;
  for (int k = k_min; k <= k_max; ++k) {
    result.curve.emplace_back(k, kmeans(table, k, seed, options).model.wcss);
  }
  if (result.curve.size() < 3) {
    result.k = k_min;
    result.no_elbow = true;
    return result;
  }
  double best_d2 = -std::numeric_limits<double>::infinity();
  int best_k = k_min;
  for (size_t i = 1; i + 1 < result.curve.size(); ++i) {
    double d2 = result.curve[i - 1].second - 2.0 * result.curve[i].second +
                result.curve[i + 1].second;
    if (d2 > best_d2) {
      best_d2 = d2;
      best_k = result.curve[i].first;
    }
  }
  if (best_d2 < floor) {
    result.k = k_min;
    result.no_elbow = true;
  } else {
    result.k = best_k;
  }
  return result;
}

ClusterAssignment assign_with_undefined(const ClusterAssignment& assignment,
                                        const FeatureTable& features) {
  ClusterAssignment out = assignment;
  const size_t zones = features.defined.size();
  if (out.labels.size() < zones) out.labels.resize(zones, ClusterAssignment::kUnassigned);

  bool any_clustered = false;
  for (uint32_t z = 0; z < zones; ++z) {
    if (out.labels[z] >= 0) {
      any_clustered = true;
    } else if (!features.is_defined(z)) {
      out.labels[z] = ClusterAssignment::kUndefined;
    } else {
      throw DataError("unassigned-zone",
                      "defined zone index " + std::to_string(z) + " was never clustered");
    }
  }
  if (!any_clustered) throw DataError("empty-feature-table", "no zone carries a cluster label");
  return out;
}

ProfileTable cluster_profile(const ClusterAssignment& assignment, const ZScoreTable& table) {
  ProfileTable profile;
  profile.k = assignment.k;
  profile.variables = table.variables;
  const size_t d = table.variables.size();
  profile.means.assign((size_t)assignment.k * d, 0.0);
  std::vector<size_t> count(assignment.k, 0);

  for (size_t r = 0; r < table.row_count(); ++r) {
    int c = assignment.labels[table.zone_index[r]];
    if (c == ClusterAssignment::kUnassigned) {
      throw DataError("unassigned-zone", "zone '" + table.zone_ids[r] + "' has no label");
    }
    if (c == ClusterAssignment::kUndefined) continue;
    count[c] += 1;
    for (size_t j = 0; j < d; ++j) profile.means[(size_t)c * d + j] += table.at(r, j);
  }
  for (int c = 0; c < assignment.k; ++c) {
    if (count[c] == 0) {
      throw DataError("empty-cluster", "cluster " + cluster_label_string(c) + " has no members");
    }
    for (size_t j = 0; j < d; ++j) profile.means[(size_t)c * d + j] /= (double)count[c];
  }
  return profile;
}

ModeShareTable mode_shares(const ClusterAssignment& assignment, const FeatureTable& features,
                           const ZoneRegistry& registry, const std::vector<std::string>& modes,
                           bool population_weighted) {
  ModeShareTable table;
  table.k = assignment.k;
  table.modes = modes;
  const size_t m = modes.size();
  std::vector<int> cols(m);
  for (size_t i = 0; i < m; ++i) {
    cols[i] = features.variable_index(modes[i]);
    if (cols[i] < 0) throw DataError("missing-column", "mode variable '" + modes[i] + "' absent");
  }

  table.shares.assign((size_t)assignment.k * m, 0.0);
  std::vector<double> weight(assignment.k, 0.0);
  for (uint32_t z = 0; z < registry.zone_count(); ++z) {
    int c = assignment.labels[z];
    if (c < 0) continue;
    double w = population_weighted ? features.population(z) : 1.0;
    weight[c] += w;
    for (size_t i = 0; i < m; ++i) {
      table.shares[(size_t)c * m + i] += w * features.at(z, (size_t)cols[i]);
    }
  }
  for (int c = 0; c < assignment.k; ++c) {
    if (weight[c] <= 0.0) {
      throw DataError("empty-cluster", "cluster " + cluster_label_string(c) + " carries no weight");
    }
    double sum = 0.0;
    for (size_t i = 0; i < m; ++i) sum += table.shares[(size_t)c * m + i];
    if (sum <= 0.0) {
      throw DataError("zero-mode-total",
                      "cluster " + cluster_label_string(c) + " has all-zero mode percentages");
    }
    for (size_t i = 0; i < m; ++i) table.shares[(size_t)c * m + i] *= 100.0 / sum;
  }
  return table;
}

void write_clusters_csv(const std::string& path, const ClusterAssignment& assignment,
                        const ZoneRegistry& registry) {
  std::ostringstream out;
  out << "zone_id,cluster\n";
  for (uint32_t z = 0; z < registry.zone_count(); ++z) {
    out << registry.zone_id(z) << ',' << cluster_label_string(assignment.labels[z]) << '\n';
  }
  write_file(path, out.str());
}

ClusterAssignment load_clusters_csv(const std::string& path, const ZoneRegistry& registry) {
  CsvFile file(path);
  int c_zone = file.require_column("zone_id");
  int c_cluster = file.require_column("cluster");
  ClusterAssignment assignment;
  assignment.labels.assign(registry.zone_count(), ClusterAssignment::kUnassigned);
  CsvRow row;
  int max_label = -1;
  while (file.next(row)) {
    auto z = registry.find_zone(row.fields.at(c_zone));
    if (!z) {
      throw DataError("unknown-zone", path + ":" + std::to_string(file.line_number()) + ": '" +
                                          std::string(row.fields.at(c_zone)) + "'");
    }
    int label = parse_cluster_label(row.fields.at(c_cluster));
    assignment.labels[*z] = label;
    max_label = std::max(max_label, label);
  }
  assignment.k = max_label + 1;
  for (uint32_t z = 0; z < registry.zone_count(); ++z) {
    if (assignment.labels[z] == ClusterAssignment::kUnassigned) {
      throw DataError("unassigned-zone", "zone '" + registry.zone_id(z) + "' missing from " + path);
    }
  }
  return assignment;
}

void write_profile_csv(const std::string& path, const ProfileTable& profile) {
  std::ostringstream out;
  out << "cluster";
  for (const auto& v : profile.variables) out << ',' << v;
  out << '\n';
  for (int c = 0; c < profile.k; ++c) {
    out << cluster_label_string(c);
    for (size_t j = 0; j < profile.variables.size(); ++j) {
      out << ',' << format_double(profile.at(c, j));
    }
    out << '\n';
  }
  write_file(path, out.str());
}

void write_mode_shares_csv(const std::string& path, const ModeShareTable& shares) {
  std::ostringstream out;
  out << "cluster";
  for (const auto& m : shares.modes) out << ',' << m;
  out << '\n';
  for (int c = 0; c < shares.k; ++c) {
    out << cluster_label_string(c);
    for (size_t j = 0; j < shares.modes.size(); ++j) out << ',' << format_double(shares.at(c, j));
    out << '\n';
  }
  write_file(path, out.str());
}

void write_elbow_curve_csv(const std::string& path, const ElbowResult& elbow) {
  std::ostringstream out;
  out << "k,wcss,selected,no_elbow\n";
  for (const auto& [k, wcss] : elbow.curve) {
    out << k << ',' << format_double(wcss) << ',' << (k == elbow.k ? 1 : 0) << ','
        << (elbow.no_elbow ? 1 : 0) << '\n';
  }
  write_file(path, out.str());
}

}  // namespace odcmp
