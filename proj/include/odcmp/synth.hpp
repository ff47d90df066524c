#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "odcmp/clustering.hpp"
#include "odcmp/compare.hpp"
#include "odcmp/crosswalk.hpp"
#include "odcmp/dates.hpp"
#include "odcmp/ingest.hpp"

namespace odcmp {

// The full demographic variable list the pipeline clusters on: commute modes,
// commute times, socioeconomics and demographics, plus the medianIncome level
// variable. Synthetic cities generate all of them.
extern const std::vector<std::string> kDemographicVariables;  // 26 percent + medianIncome

struct SynthSpec {
  int n_zones = 50;       // defined zones
  int n_undefined = 0;    // extra zones without residents (parks/airports)
  int k_true = 5;
  uint64_t seed = 1;
  int64_t population_min = 20000;
  int64_t population_max = 120000;

  // Archetypes live in z-like units mapped affinely onto percentages. When
  // the explicit matrices are empty, means are a deterministic +/-scale sign
  // pattern per (cluster, variable) and all stds equal noise_std.
  double archetype_scale = 1.5;
  double noise_std = 0.25;
  std::vector<std::vector<double>> archetype_means;  // k x variables, optional
  std::vector<std::vector<double>> archetype_stds;   // k x variables, optional

  // gravity flow field: intensity ~ mass_i * mass_j / (1 + dist/0.3)^decay,
  // scaled so intensities sum to total_trips
  double distance_decay = 0.8;
  uint64_t total_trips = 1000000;

  DateRange window{parse_date("2021-01-01"), parse_date("2021-03-31")};
  double device_rate_night = 0.06;
  double device_rate_day = 0.04;

  int split_units = 0;  // extra low-population units split across zone pairs
};

// Capture probability per true-cluster pair for the two observed datasets.
// Labels run C0..C(k-1) then UNDEFINED when undefined zones exist.
struct BiasSpec {
  size_t n_labels = 0;
  std::vector<double> capture_a;  // n_labels^2
  std::vector<double> capture_b;

  double a(size_t i, size_t j) const { return capture_a[i * n_labels + j]; }
  double b(size_t i, size_t j) const { return capture_b[i * n_labels + j]; }
};

// Deterministic bias pattern whose cellwise capture ratios cycle through
// `ratios`; both capture matrices stay within (0, 0.95].
BiasSpec make_bias_pattern(size_t n_labels, const std::vector<double>& ratios);

struct SynthCity {
  ZoneRegistry registry;
  UnitFeatures unit_features;  // raw counts, as written to the feature file
  FeatureTable features;
  ClusterAssignment truth;     // planted labels incl UNDEFINED
  std::vector<double> activity;  // gravity mass (population, or drawn for undefined zones)
  std::vector<std::pair<double, double>> positions;
  double separation_ratio = 0.0;  // min pairwise archetype distance / noise std
};

SynthCity generate_city(const SynthSpec& spec);

// Ground-truth zone flows: independent Poisson draws around the gravity
// intensities, deterministic for a given spec/seed.
FlowTable generate_flows(const SynthCity& city, const SynthSpec& spec);

// Binomial thinning: each trip of cell (i,j) survives with probability
// capture[cluster(i)][cluster(j)] for the chosen dataset.
enum class ObservedDataset : uint8_t { kA, kB };
FlowTable observe(const FlowTable& flows, const BiasSpec& bias, const ClusterAssignment& truth,
                  ObservedDataset which, uint64_t seed);

// Closed-form oracle: log2(ca/cb) + log2(sum(cb.T)/sum(ca.T)) per cell, where
// T is the true cluster-level flow matrix. Measured LRFR must approach this.
std::vector<double> expected_lrfr(const BiasSpec& bias, const ClusterODMatrix& true_flows);

// Writes every file the ingestion side of the pipeline consumes (crosswalk,
// zones, features + schema, taxi-style A, device-style B, panel), the truth
// data under truth/, and a ready-to-run pipeline_config.json.
struct SynthOutputs {
  std::string crosswalk, zones, features, features_schema;
  std::string taxi, device, panel;
  std::string true_clusters, true_flows, expected_lrfr_csv, meta;
  std::string pipeline_config;
};

SynthOutputs write_synth_inputs(const SynthCity& city, const SynthSpec& spec, const BiasSpec& bias,
                                const FlowTable& truth_flows, const FlowTable& observed_a,
                                const FlowTable& observed_b, const std::string& out_dir);

}  // namespace odcmp
