#pragma once

#include <optional>
#include <string>
#include <vector>

#include "odcmp/dates.hpp"
#include "odcmp/ingest.hpp"

namespace odcmp {

inline constexpr const char* kVersion = "0.1.0";

struct DatasetConfig {
  std::string id;
  std::string kind;  // "taxi" | "device"
  std::string path;
  TaxiColumns columns;
  bool passenger_weighted = false;
};

// Everything a run needs; loaded from a JSON config file, then optionally
// overridden by CLI flags. Paths are used as written (relative to the
// working directory).
struct PipelineConfig {
  std::string crosswalk;
  std::string zones;  // optional
  std::string features;
  std::string features_schema;
  std::string panel;  // optional; device normalization is skipped without it
  std::vector<DatasetConfig> datasets;

  DateRange window;
  std::optional<MonthRange> panel_window;

  std::optional<int> k;  // fixed k overrides the elbow selection
  int k_min = 2;
  int k_max = 8;
  double elbow_floor = 1e-9;  // below this second difference: no-elbow, use k_min
  uint64_t seed = 0;
  int restarts = 20;
  double epsilon = 0.0;
  bool include_self = true;
  int workers = 0;
  double reject_threshold = 0.05;
  bool per_day = false;
  std::string out = "out";

  std::string source_path;  // where the config was loaded from
};

PipelineConfig load_pipeline_config(const std::string& path);

// CLI flag overrides; empty/unset members leave the config value alone.
struct ConfigOverrides {
  std::optional<uint64_t> seed;
  std::optional<int> k;
  std::optional<std::pair<int, int>> k_range;
  std::optional<double> epsilon;
  std::optional<bool> include_self;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> window;        // "start..end"
  std::optional<std::string> panel_window;  // "YYYY-MM..YYYY-MM"
};

void apply_overrides(PipelineConfig& config, const ConfigOverrides& overrides);

// Pipeline stages. Each consumes input files (and prior stages' outputs under
// config.out) and writes its own outputs there, so stages can be rerun
// independently with identical results.
void run_validate(const PipelineConfig& config);
void run_ingest(const PipelineConfig& config);
void run_cluster(const PipelineConfig& config);
void run_compare(const PipelineConfig& config);
void run_all(const PipelineConfig& config);  // all stages + manifest.json

// Synthetic-city generation from its own JSON config; writes pipeline inputs,
// truth data and a ready-to-run pipeline config under out_dir.
void run_synth(const std::string& config_path, const std::string& out_dir,
               std::optional<uint64_t> seed_override = {});

}  // namespace odcmp
