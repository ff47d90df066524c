#include "odcmp/compare.hpp"

#include <algorithm>
#include <cmath>

#include "odcmp/error.hpp"

namespace odcmp {

namespace {

void compute_margins(ClusterODMatrix& m) {
  const size_t n = m.size();
  m.row_margin.assign(n, 0);
  m.col_margin.assign(n, 0);
  m.grand_total = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      uint64_t c = m.cells[i * n + j];
      m.row_margin[i] += c;
      m.col_margin[j] += c;
      m.grand_total += c;
    }
  }
}

std::vector<std::string> cluster_labels(int k, bool with_undefined) {
  std::vector<std::string> labels;
  for (int c = 0; c < k; ++c) labels.push_back(cluster_label_string(c));
  if (with_undefined) labels.push_back("UNDEFINED");
  return labels;
}

}  // namespace

ClusterODMatrix build_cluster_matrix(const FlowTable& flows, const ClusterAssignment& assignment) {
  bool has_undefined = false;
  for (int label : assignment.labels) {
    if (label == ClusterAssignment::kUndefined) has_undefined = true;
  }
  const int k = assignment.k;
  const size_t n = (size_t)k + (has_undefined ? 1 : 0);

  ClusterODMatrix m;
  m.labels = cluster_labels(k, has_undefined);
  m.cells.assign(n * n, 0);

  auto row_of = [&](uint32_t zone) -> size_t {
    if (zone >= assignment.labels.size() ||
        assignment.labels[zone] == ClusterAssignment::kUnassigned) {
      throw DataError("unassigned-zone",
                      "flow references zone index " + std::to_string(zone) + " with no label");
    }
    int label = assignment.labels[zone];
    return label == ClusterAssignment::kUndefined ? n - 1 : (size_t)label;
  };

  for (const auto& [key, count] : flows.cells()) {
    size_t i = row_of((uint32_t)(key >> 32));
    size_t j = row_of((uint32_t)key);
    m.cells[i * n + j] += count;
  }
  compute_margins(m);
  return m;
}

ClusterODMatrix build_zone_matrix(const FlowTable& flows, const ZoneRegistry& registry) {
  const size_t n = registry.zone_count();
  ClusterODMatrix m;
  m.labels = registry.zone_ids();
  m.cells.assign(n * n, 0);
  for (const auto& [key, count] : flows.cells()) {
    m.cells[(size_t)(key >> 32) * n + (uint32_t)key] += count;
  }
  compute_margins(m);
  return m;
}

ClusterODMatrix collapse_matrix(const ClusterODMatrix& m, const std::vector<int>& group,
                                const std::vector<std::string>& group_labels) {
  if (group.size() != m.size()) {
    throw DataError("shape-mismatch", "group vector does not cover the matrix");
  }
  const size_t n = group_labels.size();
  ClusterODMatrix out;
  out.labels = group_labels;
  out.cells.assign(n * n, 0);
  for (size_t i = 0; i < m.size(); ++i) {
    for (size_t j = 0; j < m.size(); ++j) {
      uint64_t c = m.at(i, j);
      if (!c) continue;
      if (group[i] < 0 || (size_t)group[i] >= n || group[j] < 0 || (size_t)group[j] >= n) {
        throw DataError("unassigned-zone", "collapse group out of range");
      }
      out.cells[(size_t)group[i] * n + (size_t)group[j]] += c;
    }
  }
  compute_margins(out);
  return out;
}

RFMatrix relative_frequency(const ClusterODMatrix& m) {
  if (m.grand_total == 0) {
    throw DataError("zero-total", "cannot take relative frequencies of an empty matrix");
  }
  RFMatrix rf;
  rf.labels = m.labels;
  rf.source_total = m.grand_total;
  rf.values.resize(m.cells.size());
  for (size_t i = 0; i < m.cells.size(); ++i) {
    rf.values[i] = (double)m.cells[i] / (double)m.grand_total;
  }
  return rf;
}

std::string_view to_string(CellFlag flag) {
  switch (flag) {
    case CellFlag::kDefined: return "defined";
    case CellFlag::kZeroDenominator: return "zero-denominator";
    case CellFlag::kZeroNumerator: return "zero-numerator";
    case CellFlag::kBothZero: return "both-zero";
  }
  return "?";
}

RatioMatrix rfr(const RFMatrix& rf_a, const RFMatrix& rf_b, double epsilon) {
  if (rf_a.labels != rf_b.labels) {
    throw DataError("shape-mismatch", "RF matrices carry different label orderings");
  }
  if (epsilon < 0.0) throw DataError("bad-epsilon", "epsilon must be >= 0");

  RatioMatrix out;
  out.labels = rf_a.labels;
  out.epsilon = epsilon;
  out.values.assign(rf_a.values.size(), std::nan(""));
  out.flags.assign(rf_a.values.size(), CellFlag::kDefined);
  for (size_t i = 0; i < rf_a.values.size(); ++i) {
    double a = rf_a.values[i] + epsilon;
    double b = rf_b.values[i] + epsilon;
    if (a > 0.0 && b > 0.0) {
      out.values[i] = a / b;
    } else if (a <= 0.0 && b <= 0.0) {
      out.flags[i] = CellFlag::kBothZero;
    } else if (b <= 0.0) {
      out.flags[i] = CellFlag::kZeroDenominator;
    } else {
      // a zero numerator would force RFR = 0 and LRFR = -inf; flagged instead
      out.flags[i] = CellFlag::kZeroNumerator;
    }
  }
  return out;
}

LrfrMatrix lrfr(const RatioMatrix& ratio, const RFMatrix& rf_a, const RFMatrix& rf_b) {
  LrfrMatrix out;
  out.labels = ratio.labels;
  out.epsilon = ratio.epsilon;
  out.flags = ratio.flags;
  out.values.assign(ratio.values.size(), std::nan(""));
  out.identity_values.assign(ratio.values.size(), std::nan(""));
  for (size_t i = 0; i < ratio.values.size(); ++i) {
    if (ratio.flags[i] != CellFlag::kDefined) continue;
    out.values[i] = std::log2(ratio.values[i]);
    out.identity_values[i] =
        std::log2(rf_a.values[i] + ratio.epsilon) - std::log2(rf_b.values[i] + ratio.epsilon);
  }
  return out;
}

std::vector<double> cluster_populations(const FeatureTable& features,
                                        const ClusterAssignment& assignment) {
  std::vector<double> pop(assignment.k, 0.0);
  for (uint32_t z = 0; z < features.defined.size(); ++z) {
    int c = z < assignment.labels.size() ? assignment.labels[z] : ClusterAssignment::kUnassigned;
    if (c < 0) continue;
    pop[c] += features.population(z);
  }
  return pop;
}

namespace {

NormalizedVectors normalize(const ClusterODMatrix& m, const std::vector<double>& denominator,
                            std::string basis) {
  NormalizedVectors out;
  out.labels = m.labels;
  out.basis = std::move(basis);
  const size_t n = m.size();
  out.within.assign(n, std::nan(""));
  out.from.assign(n, std::nan(""));
  out.to.assign(n, std::nan(""));
  out.flagged.assign(n, 0);
  out.denominator = denominator;
  for (size_t i = 0; i < n; ++i) {
    bool undefined_cluster = m.labels[i] == "UNDEFINED";
    double d = denominator[i];
    if (undefined_cluster) {
      out.flagged[i] = 1;  // no resident denominator exists; not an error
      continue;
    }
    if (!(d > 0.0)) {
      throw DataError("missing-denominator",
                      "cluster " + m.labels[i] + " has zero/missing " + out.basis);
    }
    out.within[i] = (double)m.at(i, i) / d;
    out.from[i] = (double)m.row_margin[i] / d;
    out.to[i] = (double)m.col_margin[i] / d;
  }
  return out;
}

}  // namespace

NormalizedVectors normalize_per_population(const ClusterODMatrix& m,
                                           const std::vector<double>& population) {
  std::vector<double> denom(m.size(), 0.0);
  for (size_t i = 0; i < m.size(); ++i) {
    if (m.labels[i] != "UNDEFINED") {
      if (i >= population.size()) {
        throw DataError("missing-denominator", "no population for cluster " + m.labels[i]);
      }
      denom[i] = population[i];
    }
  }
  return normalize(m, denom, "population");
}

namespace {

// Mean monthly devices per cluster over the window, weight-prorated across
// split units like every other count aggregation.
std::vector<double> cluster_devices(const DevicePanel& panel, const ClusterAssignment& assignment,
                                    const ZoneRegistry& registry, const MonthRange& window,
                                    DeviceBasis basis, size_t n_labels, size_t undefined_row) {
  if (!panel.any_month_in(window)) {
    throw DataError("empty-panel-window",
                    "device panel has no entries in " + format_month(window.start) + ".." +
                        format_month(window.end));
  }
  std::vector<double> devices(n_labels, 0.0);
  for (const auto& unit : registry.unit_ids()) {
    auto mean = panel.mean_over(unit, window);
    double value = basis == DeviceBasis::kNight ? mean.residing : mean.daytime;
    if (value == 0.0) continue;
    for (const auto& share : registry.map_unit(unit)) {
      int label = assignment.labels[share.zone];
      if (label == ClusterAssignment::kUnassigned) continue;
      size_t row = label == ClusterAssignment::kUndefined ? undefined_row : (size_t)label;
      if (row >= n_labels) continue;
      devices[row] += share.weight * value;
    }
  }
  return devices;
}

}  // namespace

NormalizedVectors normalize_per_device(const ClusterODMatrix& m, const DevicePanel& panel,
                                       const ClusterAssignment& assignment,
                                       const ZoneRegistry& registry, const MonthRange& window,
                                       DeviceBasis basis) {
  bool has_undefined = !m.labels.empty() && m.labels.back() == "UNDEFINED";
  auto devices = cluster_devices(panel, assignment, registry, window, basis, m.size(),
                                 has_undefined ? m.size() - 1 : m.size());
  NormalizedVectors out;
  const std::string name = basis == DeviceBasis::kNight ? "devices_night" : "devices_day";
  // undefined zones can legitimately host devices (daytime airports) but the
  // cluster stays flagged for symmetry with the population normalization
  out = normalize(m, devices, name);
  return out;
}

SamplingRateTable sampling_rate(const DevicePanel& panel, const std::vector<double>& population,
                                const ClusterAssignment& assignment, const ZoneRegistry& registry,
                                const MonthRange& window) {
  const int k = assignment.k;
  if ((size_t)k > population.size()) {
    throw DataError("missing-denominator", "population vector shorter than cluster count");
  }
  auto night = cluster_devices(panel, assignment, registry, window, DeviceBasis::kNight, (size_t)k,
                               (size_t)k);
  auto day =
      cluster_devices(panel, assignment, registry, window, DeviceBasis::kDay, (size_t)k, (size_t)k);

  SamplingRateTable table;
  for (int c = 0; c < k; ++c) {
    if (!(population[c] > 0.0)) {
      throw DataError("missing-denominator",
                      "cluster " + cluster_label_string(c) + " has no population");
    }
    table.labels.push_back(cluster_label_string(c));
    table.population.push_back(population[c]);
    table.devices_night.push_back(night[c]);
    table.devices_day.push_back(day[c]);
    table.rate_night_pct.push_back(100.0 * night[c] / population[c]);
    table.rate_day_pct.push_back(100.0 * day[c] / population[c]);
  }
  return table;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("length-mismatch", "pearson needs equal-length vectors");
  const size_t n = x.size();
  if (n < 2) throw DataError("length-mismatch", "pearson needs at least 2 points");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= (double)n;
  my /= (double)n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("zero-variance", "pearson undefined");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace odcmp
