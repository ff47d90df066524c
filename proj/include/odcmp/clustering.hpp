#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odcmp/crosswalk.hpp"

namespace odcmp {

// Per-variable z-scores over the defined zones. Column means are 0 and
// population standard deviations 1 (zero-variance columns become all zeros
// and are flagged).
struct ZScoreTable {
  struct ColumnStats {
    double mean = 0.0;
    double stddev = 0.0;
    bool zero_variance = false;
  };

  std::vector<std::string> variables;
  std::vector<std::string> zone_ids;   // defined zones, registry order
  std::vector<uint32_t> zone_index;    // their indices in the registry
  std::vector<double> values;          // rows x variables
  std::vector<ColumnStats> column_stats;

  size_t row_count() const { return zone_ids.size(); }
  double at(size_t row, size_t var) const { return values[row * variables.size() + var]; }
};

// Standardizes the given variables (default: every percent and level column)
// over defined zones. Throws DataError missing-column / too-few-zones.
ZScoreTable standardize(const FeatureTable& features, const ZoneRegistry& registry,
                        std::vector<std::string> variables = {});

struct ClusterModel {
  int k = 0;
  size_t n_vars = 0;
  std::vector<double> centroids;  // k x n_vars, z-score space, canonical order
  uint64_t seed = 0;
  int restarts = 0;
  double wcss = 0.0;
};

struct ClusterAssignment {
  static constexpr int kUndefined = -1;
  static constexpr int kUnassigned = -2;

  int k = 0;
  std::vector<int> labels;  // one per registry zone
  // canonical order: clusters sorted by descending member count, ties by
  // smallest member zone id; makes runs comparable across seeds and input
  // permutations
  std::string label_order = "size-desc,min-zone-id";

  int label(uint32_t zone) const { return labels[zone]; }
};

std::string cluster_label_string(int label);
int parse_cluster_label(std::string_view s);  // "C3" -> 3, "UNDEFINED" -> kUndefined

struct KmeansOptions {
  int restarts = 20;
  int max_iterations = 300;
  int threads = 0;  // 0 = all available; results are thread-count invariant
};

struct KmeansResult {
  ClusterModel model;
  ClusterAssignment assignment;  // defined zones labeled, others kUnassigned
};

// Lloyd iterations from k-means++ seeding until the assignment reaches a
// fixpoint (or max_iterations); best of `restarts` runs by WCSS with ties to
// the lowest restart index. Restart r draws from derive_seed(seed, r), so the
// result is reproducible bit-for-bit for a given (table, k, seed, restarts).
KmeansResult kmeans(const ZScoreTable& table, int k, uint64_t seed,
                    const KmeansOptions& options = {});

struct ElbowResult {
  int k = 0;
  bool no_elbow = false;
  std::vector<std::pair<int, double>> curve;  // (k, best wcss)
};

// Runs kmeans for each k in [k_min, k_max] and picks the k maximizing the
// discrete second difference of the WCSS curve (ties to smaller k). Below
// `floor`, or with fewer than 3 curve points, falls back to k_min with the
// no-elbow flag set.
ElbowResult select_k_elbow(const ZScoreTable& table, int k_min, int k_max, uint64_t seed,
                           const KmeansOptions& options = {}, double floor = 1e-9);

// Extends a kmeans assignment to every registry zone: zones outside the
// z-score table become UNDEFINED when the feature table marks them undefined.
ClusterAssignment assign_with_undefined(const ClusterAssignment& assignment,
                                        const FeatureTable& features);

// cluster x variable mean z-scores (UNDEFINED excluded).
struct ProfileTable {
  int k = 0;
  std::vector<std::string> variables;
  std::vector<double> means;  // k x variables
  double at(int cluster, size_t var) const { return means[(size_t)cluster * variables.size() + var]; }
};

ProfileTable cluster_profile(const ClusterAssignment& assignment, const ZScoreTable& table);

// Commute-mode composition per cluster: population-weighted mean of each mode
// percentage, renormalized so the modes sum to 100.
struct ModeShareTable {
  int k = 0;
  std::vector<std::string> modes;
  std::vector<double> shares;  // k x modes, percent
  double at(int cluster, size_t mode) const { return shares[(size_t)cluster * modes.size() + mode]; }
};

extern const std::vector<std::string> kCommuteModeVariables;

ModeShareTable mode_shares(const ClusterAssignment& assignment, const FeatureTable& features,
                           const ZoneRegistry& registry,
                           const std::vector<std::string>& modes = kCommuteModeVariables,
                           bool population_weighted = true);

void write_clusters_csv(const std::string& path, const ClusterAssignment& assignment,
                        const ZoneRegistry& registry);
ClusterAssignment load_clusters_csv(const std::string& path, const ZoneRegistry& registry);
void write_profile_csv(const std::string& path, const ProfileTable& profile);
void write_mode_shares_csv(const std::string& path, const ModeShareTable& shares);
void write_elbow_curve_csv(const std::string& path, const ElbowResult& elbow);

}  // namespace odcmp
