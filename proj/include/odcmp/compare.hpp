#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "odcmp/clustering.hpp"
#include "odcmp/crosswalk.hpp"
#include "odcmp/ingest.hpp"

namespace odcmp {

// Cluster-level OD counts with the "U" aggregates: row margins (trips
// starting in a cluster), column margins (trips ending in one) and the grand
// total. All exact integers.
struct ClusterODMatrix {
  std::vector<std::string> labels;  // C0..C(k-1)[,UNDEFINED]
  std::vector<uint64_t> cells;      // labels.size()^2, row = origin
  std::vector<uint64_t> row_margin;
  std::vector<uint64_t> col_margin;
  uint64_t grand_total = 0;

  size_t size() const { return labels.size(); }
  uint64_t at(size_t i, size_t j) const { return cells[i * labels.size() + j]; }
};

// Collapses zone-level flows onto cluster labels. grand_total equals the
// table's total; every zone with flow must carry a label.
ClusterODMatrix build_cluster_matrix(const FlowTable& flows, const ClusterAssignment& assignment);

// Zone-level variant (each zone its own row) for the aggregation-equivalence
// check; `collapse_matrix` folds rows/columns by group index.
ClusterODMatrix build_zone_matrix(const FlowTable& flows, const ZoneRegistry& registry);
ClusterODMatrix collapse_matrix(const ClusterODMatrix& m, const std::vector<int>& group,
                                const std::vector<std::string>& group_labels);

// Cell shares of the dataset total: values in [0,1] summing to 1.
struct RFMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;
  uint64_t source_total = 0;

  size_t size() const { return labels.size(); }
  double at(size_t i, size_t j) const { return values[i * labels.size() + j]; }
};

RFMatrix relative_frequency(const ClusterODMatrix& m);

// Cells that cannot carry a finite positive ratio are flagged rather than
// smoothed away; optional additive epsilon smoothing is recorded in the
// report metadata when used.
enum class CellFlag : uint8_t {
  kDefined = 0,
  kZeroDenominator,
  kZeroNumerator,
  kBothZero,
};

std::string_view to_string(CellFlag flag);

struct RatioMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;    // meaningful only where flag == kDefined
  std::vector<CellFlag> flags;
  double epsilon = 0.0;

  size_t size() const { return labels.size(); }
  double at(size_t i, size_t j) const { return values[i * labels.size() + j]; }
  CellFlag flag(size_t i, size_t j) const { return flags[i * labels.size() + j]; }
  bool defined(size_t i, size_t j) const { return flag(i, j) == CellFlag::kDefined; }
};

// Cellwise RF ratio rf_a/rf_b. With epsilon > 0 both RFs are shifted before
// the ratio and every cell is defined.
RatioMatrix rfr(const RFMatrix& rf_a, const RFMatrix& rf_b, double epsilon = 0.0);

struct LrfrMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;           // log2 of the ratio
  std::vector<double> identity_values;  // log2(rf_a) - log2(rf_b) cross-check route
  std::vector<CellFlag> flags;
  double epsilon = 0.0;

  size_t size() const { return labels.size(); }
  double at(size_t i, size_t j) const { return values[i * labels.size() + j]; }
  CellFlag flag(size_t i, size_t j) const { return flags[i * labels.size() + j]; }
  bool defined(size_t i, size_t j) const { return flag(i, j) == CellFlag::kDefined; }
};

// Binary logarithm of the ratio matrix; undefined cells propagate. The
// identity route log2(rf_a) - log2(rf_b) is exposed alongside for
// cross-checking the two algebraic paths.
LrfrMatrix lrfr(const RatioMatrix& ratio, const RFMatrix& rf_a, const RFMatrix& rf_b);

// trips / persons for within, from and to each cluster. UNDEFINED has no
// population and is emitted flagged rather than failing the run.
struct NormalizedVectors {
  std::vector<std::string> labels;
  std::vector<double> within;
  std::vector<double> from;
  std::vector<double> to;
  std::vector<uint8_t> flagged;  // no denominator for this cluster
  std::vector<double> denominator;  // persons or devices used per cluster
  std::string basis;                // "population" | "devices_night" | "devices_day"
};

// Populations per numeric cluster label from the zone feature table.
std::vector<double> cluster_populations(const FeatureTable& features,
                                        const ClusterAssignment& assignment);

NormalizedVectors normalize_per_population(const ClusterODMatrix& m,
                                           const std::vector<double>& population);

enum class DeviceBasis : uint8_t { kNight, kDay };

// Cluster device mass = weight-prorated sum over member units of mean monthly
// devices within `window`; then trips/devices as in the population variant.
NormalizedVectors normalize_per_device(const ClusterODMatrix& m, const DevicePanel& panel,
                                       const ClusterAssignment& assignment,
                                       const ZoneRegistry& registry, const MonthRange& window,
                                       DeviceBasis basis);

// Table 2 shape: per-cluster population, mean monthly devices (night and
// day), and device/population rates in percent.
struct SamplingRateTable {
  std::vector<std::string> labels;  // numeric clusters only
  std::vector<double> population;
  std::vector<double> devices_night;
  std::vector<double> devices_day;
  std::vector<double> rate_night_pct;
  std::vector<double> rate_day_pct;
};

SamplingRateTable sampling_rate(const DevicePanel& panel, const std::vector<double>& population,
                                const ClusterAssignment& assignment, const ZoneRegistry& registry,
                                const MonthRange& window);

// Product-moment correlation; requires equal lengths >= 2 and nonzero
// variance on both sides.
double pearson(std::span<const double> x, std::span<const double> y);

// Everything the comparison stage produces, bundled for report.json.
struct ComparisonReport {
  std::string dataset_a;
  std::string dataset_b;
  ClusterODMatrix od_a;
  ClusterODMatrix od_b;
  RFMatrix rf_a;
  RFMatrix rf_b;
  RatioMatrix ratio;
  LrfrMatrix log_ratio;
  double epsilon = 0.0;
};

}  // namespace odcmp
