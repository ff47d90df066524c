#include "odcmp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "odcmp/clustering.hpp"
#include "odcmp/compare.hpp"
#include "odcmp/crosswalk.hpp"
#include "odcmp/emit.hpp"
#include "odcmp/error.hpp"
#include "odcmp/io.hpp"
#include "odcmp/synth.hpp"

namespace odcmp {

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config '" + path + "' is not valid JSON");
  return j;
}

std::string out_path(const PipelineConfig& config, const std::string& name) {
  return config.out + "/" + name;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

DateRange parse_window_json(const json& j, const std::string& what) {
  require(j.is_object() && j.contains("start") && j.contains("end"),
          what + " must be {\"start\": ..., \"end\": ...}");
  DateRange w{parse_date(j["start"].get<std::string>()), parse_date(j["end"].get<std::string>())};
  require(w.start <= w.end, what + " start is after end");
  return w;
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
  json j = load_json_file(path);
  PipelineConfig config;
  config.source_path = path;

  require(j.contains("crosswalk"), "config needs 'crosswalk'");
  config.crosswalk = j["crosswalk"].get<std::string>();
  if (j.contains("zones")) config.zones = j["zones"].get<std::string>();
  require(j.contains("features") && j.contains("features_schema"),
          "config needs 'features' and 'features_schema'");
  config.features = j["features"].get<std::string>();
  config.features_schema = j["features_schema"].get<std::string>();
  if (j.contains("panel")) config.panel = j["panel"].get<std::string>();

  require(j.contains("datasets") && j["datasets"].is_array() && j["datasets"].size() == 2,
          "config needs exactly two entries under 'datasets'");
  for (const auto& dj : j["datasets"]) {
    DatasetConfig d;
    require(dj.contains("id") && dj.contains("kind") && dj.contains("path"),
            "each dataset needs id, kind, path");
    d.id = dj["id"].get<std::string>();
    d.kind = dj["kind"].get<std::string>();
    require(d.kind == "taxi" || d.kind == "device", "dataset kind must be 'taxi' or 'device'");
    d.path = dj["path"].get<std::string>();
    if (dj.contains("passenger_weighted")) d.passenger_weighted = dj["passenger_weighted"].get<bool>();
    if (dj.contains("columns")) {
      const auto& cj = dj["columns"];
      if (cj.contains("pickup_datetime")) d.columns.pickup_datetime = cj["pickup_datetime"];
      if (cj.contains("pickup_zone")) d.columns.pickup_zone = cj["pickup_zone"];
      if (cj.contains("dropoff_zone")) d.columns.dropoff_zone = cj["dropoff_zone"];
      if (cj.contains("passenger_count")) d.columns.passenger_count = cj["passenger_count"];
    }
    config.datasets.push_back(std::move(d));
  }
  require(config.datasets[0].id != config.datasets[1].id, "dataset ids must differ");

  require(j.contains("window"), "config needs 'window'");
  config.window = parse_window_json(j["window"], "window");

  if (j.contains("panel_window")) {
    const auto& pj = j["panel_window"];
    require(pj.is_object() && pj.contains("start") && pj.contains("end"),
            "panel_window must be {\"start\": \"YYYY-MM\", \"end\": \"YYYY-MM\"}");
    MonthRange w{parse_month(pj["start"].get<std::string>()),
                 parse_month(pj["end"].get<std::string>())};
    require(w.start <= w.end, "panel_window start is after end");
    config.panel_window = w;
  }
  require(config.panel.empty() || config.panel_window.has_value(),
          "a panel input needs an explicit 'panel_window' (the device averaging window)");

  if (j.contains("k")) config.k = j["k"].get<int>();
  if (j.contains("k_range")) {
    require(j["k_range"].is_array() && j["k_range"].size() == 2, "k_range must be [min, max]");
    config.k_min = j["k_range"][0].get<int>();
    config.k_max = j["k_range"][1].get<int>();
  }
  if (j.contains("elbow_floor")) config.elbow_floor = j["elbow_floor"].get<double>();
  if (j.contains("seed")) config.seed = j["seed"].get<uint64_t>();
  if (j.contains("restarts")) config.restarts = j["restarts"].get<int>();
  if (j.contains("epsilon")) config.epsilon = j["epsilon"].get<double>();
  require(config.epsilon >= 0.0, "epsilon must be >= 0");
  if (j.contains("include_self")) config.include_self = j["include_self"].get<bool>();
  if (j.contains("workers")) config.workers = j["workers"].get<int>();
  if (j.contains("reject_threshold")) config.reject_threshold = j["reject_threshold"].get<double>();
  if (j.contains("per_day")) config.per_day = j["per_day"].get<bool>();
  if (j.contains("out")) config.out = j["out"].get<std::string>();
  return config;
}

void apply_overrides(PipelineConfig& config, const ConfigOverrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.k) config.k = *overrides.k;
  if (overrides.k_range) {
    config.k = std::nullopt;
    config.k_min = overrides.k_range->first;
    config.k_max = overrides.k_range->second;
  }
  if (overrides.epsilon) config.epsilon = *overrides.epsilon;
  if (overrides.include_self) config.include_self = *overrides.include_self;
  if (overrides.workers) config.workers = *overrides.workers;
  if (overrides.out) config.out = *overrides.out;
  if (overrides.window) config.window = parse_date_range(*overrides.window);
  if (overrides.panel_window) config.panel_window = parse_month_range(*overrides.panel_window);
  if (config.epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
}

namespace {

struct LoadedBase {
  ZoneRegistry registry;
  FeatureTable features;
};

LoadedBase load_base_inputs(const PipelineConfig& config) {
  LoadedBase base;
  base.registry = load_crosswalk(config.crosswalk, config.zones);
  base.features = aggregate_features(base.registry,
                                     load_unit_features(config.features, config.features_schema));
  return base;
}

LoadedBase load_base_from_out(const PipelineConfig& config) {
  LoadedBase base;
  base.registry = load_crosswalk(config.crosswalk, config.zones);
  base.features = load_zone_features_csv(out_path(config, "zone_features.csv"),
                                         out_path(config, "zone_features_schema.csv"),
                                         base.registry);
  return base;
}

IngestOptions ingest_options(const PipelineConfig& config, const DatasetConfig& dataset) {
  IngestOptions options;
  options.window = config.window;
  options.workers = config.workers;
  options.reject_threshold = config.reject_threshold;
  options.include_self = config.include_self;
  options.passenger_weighted = dataset.passenger_weighted;
  options.per_day = config.per_day;
  options.taxi_columns = dataset.columns;
  return options;
}

json reject_json(const RejectLog& log) {
  json j;
  j["accepted"] = log.accepted;
  j["rejected"] = log.rejected;
  j["reasons"] = log.reasons;
  j["samples"] = log.samples;
  return j;
}

json matrix_json(const std::vector<double>& values, const std::vector<CellFlag>& flags, size_t n) {
  json rows = json::array();
  for (size_t i = 0; i < n; ++i) {
    json row = json::array();
    for (size_t j = 0; j < n; ++j) {
      size_t idx = i * n + j;
      if (!flags.empty() && flags[idx] != CellFlag::kDefined) {
        row.push_back(nullptr);
      } else {
        row.push_back(values[idx]);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json od_json(const ClusterODMatrix& m) {
  json j;
  json rows = json::array();
  for (size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (size_t jj = 0; jj < m.size(); ++jj) row.push_back(m.at(i, jj));
    rows.push_back(std::move(row));
  }
  j["cells"] = std::move(rows);
  j["row_margin"] = m.row_margin;
  j["col_margin"] = m.col_margin;
  j["grand_total"] = m.grand_total;
  return j;
}

std::string iso_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void run_validate(const PipelineConfig& config) {
  LoadedBase base = load_base_inputs(config);
  size_t defined = 0;
  for (uint32_t z = 0; z < base.registry.zone_count(); ++z) {
    if (base.features.is_defined(z)) ++defined;
  }
  write_zone_features_csv(out_path(config, "zone_features.csv"), base.registry, base.features);
  write_zone_features_schema_csv(out_path(config, "zone_features_schema.csv"), base.features);
  std::printf("crosswalk ok: %zu zones (%zu defined, %zu undefined), %zu units, %zu variables\n",
              base.registry.zone_count(), defined, base.registry.zone_count() - defined,
              base.registry.unit_count(), base.features.variable_count());
}

void run_ingest(const PipelineConfig& config) {
  ZoneRegistry registry = load_crosswalk(config.crosswalk, config.zones);
  for (const auto& dataset : config.datasets) {
    IngestOptions options = ingest_options(config, dataset);
    FlowTable table = dataset.kind == "taxi"
                          ? ingest_od_trips(dataset.path, registry, options, dataset.id)
                          : ingest_unit_flows(dataset.path, registry, options, dataset.id);
    write_flow_table_csv(out_path(config, "flows_" + dataset.id + ".csv"), table, registry);
    if (config.per_day) {
      write_flow_table_by_day_csv(out_path(config, "flows_" + dataset.id + "_by_day.csv"), table,
                                  registry);
    }
    json meta;
    meta["dataset_id"] = dataset.id;
    meta["kind"] = dataset.kind;
    meta["total"] = table.total();
    meta["window"] = {{"start", format_date(config.window.start)},
                      {"end", format_date(config.window.end)}};
    meta["rejects"] = reject_json(table.rejects());
    write_file(out_path(config, "ingest_" + dataset.id + ".json"), meta.dump(2) + "\n");
    std::printf("ingested %s: %llu trips, %llu rejects\n", dataset.id.c_str(),
                (unsigned long long)table.total(), (unsigned long long)table.rejects().rejected);
  }
}

void run_cluster(const PipelineConfig& config) {
  LoadedBase base = load_base_from_out(config);
  ZScoreTable z = standardize(base.features, base.registry);

  KmeansOptions kopts;
  kopts.restarts = config.restarts;
  kopts.threads = config.workers;

  int k;
  if (config.k) {
    k = *config.k;
  } else {
    ElbowResult elbow =
        select_k_elbow(z, config.k_min, config.k_max, config.seed, kopts, config.elbow_floor);
    write_elbow_curve_csv(out_path(config, "elbow_curve.csv"), elbow);
    k = elbow.k;
    std::printf("elbow selected k=%d%s\n", k, elbow.no_elbow ? " (no elbow; using k_min)" : "");
  }

  KmeansResult result = kmeans(z, k, config.seed, kopts);
  ClusterAssignment assignment = assign_with_undefined(result.assignment, base.features);
  write_clusters_csv(out_path(config, "clusters.csv"), assignment, base.registry);
  write_profile_csv(out_path(config, "profile.csv"), cluster_profile(assignment, z));
  write_mode_shares_csv(out_path(config, "mode_shares.csv"),
                        mode_shares(assignment, base.features, base.registry));
  std::printf("clustered %zu defined zones into k=%d (wcss=%g)\n", z.row_count(), k,
              result.model.wcss);
}

void run_compare(const PipelineConfig& config) {
  LoadedBase base = load_base_from_out(config);
  ClusterAssignment assignment =
      load_clusters_csv(out_path(config, "clusters.csv"), base.registry);

  const DatasetConfig& da = config.datasets[0];
  const DatasetConfig& db = config.datasets[1];
  FlowTable flows_a =
      load_flow_table_csv(out_path(config, "flows_" + da.id + ".csv"), base.registry, da.id);
  FlowTable flows_b =
      load_flow_table_csv(out_path(config, "flows_" + db.id + ".csv"), base.registry, db.id);

  ComparisonReport report;
  report.dataset_a = da.id;
  report.dataset_b = db.id;
  report.epsilon = config.epsilon;
  report.od_a = build_cluster_matrix(flows_a, assignment);
  report.od_b = build_cluster_matrix(flows_b, assignment);
  report.rf_a = relative_frequency(report.od_a);
  report.rf_b = relative_frequency(report.od_b);
  report.ratio = rfr(report.rf_a, report.rf_b, config.epsilon);
  report.log_ratio = lrfr(report.ratio, report.rf_a, report.rf_b);

  write_od_matrix_csv(out_path(config, "od_" + da.id + ".csv"), report.od_a);
  write_od_matrix_csv(out_path(config, "od_" + db.id + ".csv"), report.od_b);
  write_rf_matrix_csv(out_path(config, "rf_" + da.id + ".csv"), report.rf_a, report.od_a);
  write_rf_matrix_csv(out_path(config, "rf_" + db.id + ".csv"), report.rf_b, report.od_b);
  write_rfr_csv(out_path(config, "rfr.csv"), out_path(config, "rfr_flags.csv"), report.ratio,
                report.od_a, report.od_b);
  write_lrfr_csv(out_path(config, "lrfr.csv"), out_path(config, "lrfr_flags.csv"),
                 report.log_ratio, report.od_a, report.od_b);
  write_chord_edges_csv(out_path(config, "chord_edges_" + da.id + ".csv"), report.od_a);
  write_chord_edges_csv(out_path(config, "chord_edges_" + db.id + ".csv"), report.od_b);
  write_lrfr_heatmap_svg(out_path(config, "lrfr_heatmap.svg"), report.log_ratio, report.od_a,
                         report.od_b);

  std::vector<double> population = cluster_populations(base.features, assignment);
  NormalizedVectors norm_pop = normalize_per_population(report.od_a, population);
  write_normalized_csv(out_path(config, "normalized_population_" + da.id + ".csv"), norm_pop);
  NormalizedVectors norm_pop_b = normalize_per_population(report.od_b, population);
  write_normalized_csv(out_path(config, "normalized_population_" + db.id + ".csv"), norm_pop_b);

  json j;
  j["metadata"] = {{"tool", "odcmp"},
                   {"version", kVersion},
                   {"dataset_a", da.id},
                   {"dataset_b", db.id},
                   {"window", {{"start", format_date(config.window.start)},
                               {"end", format_date(config.window.end)}}},
                   {"epsilon", config.epsilon},
                   {"seed", config.seed},
                   {"k", assignment.k},
                   {"notes", base.features.notes}};
  j["labels"] = report.od_a.labels;
  j["od"][da.id] = od_json(report.od_a);
  j["od"][db.id] = od_json(report.od_b);
  j["rf"][da.id] = matrix_json(report.rf_a.values, {}, report.rf_a.size());
  j["rf"][db.id] = matrix_json(report.rf_b.values, {}, report.rf_b.size());
  j["rfr"] = matrix_json(report.ratio.values, report.ratio.flags, report.ratio.size());
  j["lrfr"] = matrix_json(report.log_ratio.values, report.log_ratio.flags, report.log_ratio.size());
  j["lrfr_identity"] =
      matrix_json(report.log_ratio.identity_values, report.log_ratio.flags, report.log_ratio.size());
  auto norm_json = [](const NormalizedVectors& v) {
    json out;
    out["labels"] = v.labels;
    out["basis"] = v.basis;
    json within = json::array(), from = json::array(), to = json::array();
    for (size_t i = 0; i < v.labels.size(); ++i) {
      if (v.flagged[i]) {
        within.push_back(nullptr);
        from.push_back(nullptr);
        to.push_back(nullptr);
      } else {
        within.push_back(v.within[i]);
        from.push_back(v.from[i]);
        to.push_back(v.to[i]);
      }
    }
    out["within"] = std::move(within);
    out["from"] = std::move(from);
    out["to"] = std::move(to);
    return out;
  };
  j["normalized"]["population_" + da.id] = norm_json(norm_pop);
  j["normalized"]["population_" + db.id] = norm_json(norm_pop_b);

  if (!config.panel.empty()) {
    DevicePanel panel = load_device_panel(config.panel);
    const MonthRange& window = *config.panel_window;

    // the device-style dataset is normalized per device; default to b
    const bool device_is_b = db.kind == "device" || da.kind != "device";
    const ClusterODMatrix& od_dev = device_is_b ? report.od_b : report.od_a;
    const std::string& dev_id = device_is_b ? db.id : da.id;

    NormalizedVectors per_night = normalize_per_device(od_dev, panel, assignment, base.registry,
                                                       window, DeviceBasis::kNight);
    NormalizedVectors per_day = normalize_per_device(od_dev, panel, assignment, base.registry,
                                                     window, DeviceBasis::kDay);
    write_normalized_csv(out_path(config, "normalized_devices_night_" + dev_id + ".csv"), per_night);
    write_normalized_csv(out_path(config, "normalized_devices_day_" + dev_id + ".csv"), per_day);
    j["normalized"]["devices_night_" + dev_id] = norm_json(per_night);
    j["normalized"]["devices_day_" + dev_id] = norm_json(per_day);

    SamplingRateTable rates =
        sampling_rate(panel, population, assignment, base.registry, window);
    write_sampling_rates_csv(out_path(config, "sampling_rates.csv"), rates);
    json rate_rows = json::array();
    for (size_t i = 0; i < rates.labels.size(); ++i) {
      rate_rows.push_back({{"cluster", rates.labels[i]},
                           {"population", rates.population[i]},
                           {"devices_night", rates.devices_night[i]},
                           {"devices_day", rates.devices_day[i]},
                           {"rate_night_pct", rates.rate_night_pct[i]},
                           {"rate_day_pct", rates.rate_day_pct[i]}});
    }
    j["sampling_rates"] = std::move(rate_rows);

    // zone-level correlations over defined zones: devices vs trip volume of
    // the device dataset, and devices vs resident population
    const FlowTable& dev_flows = device_is_b ? flows_b : flows_a;
    ClusterODMatrix zone_matrix = build_zone_matrix(dev_flows, base.registry);
    std::vector<double> zone_devices(base.registry.zone_count(), 0.0);
    for (const auto& unit : base.registry.unit_ids()) {
      double mean = panel.mean_over(unit, window).residing;
      if (mean == 0.0) continue;
      for (const auto& share : base.registry.map_unit(unit)) {
        zone_devices[share.zone] += share.weight * mean;
      }
    }
    std::vector<double> devices, trips, pop_zone;
    for (uint32_t z = 0; z < base.registry.zone_count(); ++z) {
      if (!base.features.is_defined(z)) continue;
      devices.push_back(zone_devices[z]);
      trips.push_back((double)(zone_matrix.row_margin[z] + zone_matrix.col_margin[z]));
      pop_zone.push_back(base.features.population(z));
    }
    json correlations;
    try {
      correlations["devices_night_vs_trips"] = pearson(devices, trips);
    } catch (const DataError&) {
      correlations["devices_night_vs_trips"] = nullptr;
    }
    try {
      correlations["devices_night_vs_population"] = pearson(devices, pop_zone);
    } catch (const DataError&) {
      correlations["devices_night_vs_population"] = nullptr;
    }
    j["correlations"] = std::move(correlations);
  }

  write_file(out_path(config, "report.json"), j.dump(2) + "\n");
  std::printf("compared %s vs %s over %zu labels (totals %llu vs %llu)\n", da.id.c_str(),
              db.id.c_str(), report.od_a.labels.size(), (unsigned long long)report.od_a.grand_total,
              (unsigned long long)report.od_b.grand_total);
}

void run_all(const PipelineConfig& config) {
  run_validate(config);
  run_ingest(config);
  run_cluster(config);
  run_compare(config);

  json manifest;
  manifest["tool"] = "odcmp";
  manifest["version"] = kVersion;
  manifest["created"] = iso_timestamp();
  manifest["config_path"] = config.source_path;
  manifest["seed"] = config.seed;
  manifest["seed_derivation"] =
      "restart r of kmeans uses derive_seed(seed, r); synth streams use fixed tags";

  json inputs;
  auto digest = [&](const std::string& path) {
    if (!path.empty()) inputs[path] = sha256_file_hex(path);
  };
  digest(config.crosswalk);
  digest(config.zones);
  digest(config.features);
  digest(config.features_schema);
  digest(config.panel);
  for (const auto& dataset : config.datasets) digest(dataset.path);
  manifest["inputs"] = std::move(inputs);

  json echo;
  echo["window"] = {{"start", format_date(config.window.start)},
                    {"end", format_date(config.window.end)}};
  if (config.panel_window) {
    echo["panel_window"] = {{"start", format_month(config.panel_window->start)},
                            {"end", format_month(config.panel_window->end)}};
  }
  if (config.k) {
    echo["k"] = *config.k;
  } else {
    echo["k_range"] = {config.k_min, config.k_max};
  }
  echo["restarts"] = config.restarts;
  echo["epsilon"] = config.epsilon;
  echo["include_self"] = config.include_self;
  echo["workers"] = config.workers;
  echo["reject_threshold"] = config.reject_threshold;
  echo["per_day"] = config.per_day;
  manifest["parameters"] = std::move(echo);

  std::vector<std::string> outputs;
  for (const auto& entry : std::filesystem::directory_iterator(config.out)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
      outputs.push_back(entry.path().filename().string());
    }
  }
  std::sort(outputs.begin(), outputs.end());
  manifest["outputs"] = outputs;

  write_file(out_path(config, "manifest.json"), manifest.dump(2) + "\n");
}

void run_synth(const std::string& config_path, const std::string& out_dir,
               std::optional<uint64_t> seed_override) {
  json j = load_json_file(config_path);
  SynthSpec spec;
  if (j.contains("n_zones")) spec.n_zones = j["n_zones"].get<int>();
  if (j.contains("n_undefined")) spec.n_undefined = j["n_undefined"].get<int>();
  if (j.contains("k_true")) spec.k_true = j["k_true"].get<int>();
  if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
  if (seed_override) spec.seed = *seed_override;
  if (j.contains("population")) {
    require(j["population"].is_array() && j["population"].size() == 2,
            "population must be [min, max]");
    spec.population_min = j["population"][0].get<int64_t>();
    spec.population_max = j["population"][1].get<int64_t>();
  }
  if (j.contains("archetype_scale")) spec.archetype_scale = j["archetype_scale"].get<double>();
  if (j.contains("noise_std")) spec.noise_std = j["noise_std"].get<double>();
  if (j.contains("archetype_means")) {
    spec.archetype_means = j["archetype_means"].get<std::vector<std::vector<double>>>();
  }
  if (j.contains("archetype_stds")) {
    spec.archetype_stds = j["archetype_stds"].get<std::vector<std::vector<double>>>();
  }
  if (j.contains("distance_decay")) spec.distance_decay = j["distance_decay"].get<double>();
  if (j.contains("total_trips")) spec.total_trips = j["total_trips"].get<uint64_t>();
  if (j.contains("window")) spec.window = parse_window_json(j["window"], "window");
  if (j.contains("device_rate_night")) spec.device_rate_night = j["device_rate_night"].get<double>();
  if (j.contains("device_rate_day")) spec.device_rate_day = j["device_rate_day"].get<double>();
  if (j.contains("split_units")) spec.split_units = j["split_units"].get<int>();

  SynthCity city = generate_city(spec);

  const size_t n_labels = (size_t)spec.k_true + (spec.n_undefined > 0 ? 1 : 0);
  BiasSpec bias;
  if (j.contains("bias") && j["bias"].contains("capture_a")) {
    auto ca = j["bias"]["capture_a"].get<std::vector<std::vector<double>>>();
    auto cb = j["bias"]["capture_b"].get<std::vector<std::vector<double>>>();
    require(ca.size() == n_labels && cb.size() == n_labels,
            "capture matrices must cover all true clusters (plus UNDEFINED when present)");
    bias.n_labels = n_labels;
    for (const auto& row : ca) {
      require(row.size() == n_labels, "capture_a rows must have n_labels entries");
      bias.capture_a.insert(bias.capture_a.end(), row.begin(), row.end());
    }
    for (const auto& row : cb) {
      require(row.size() == n_labels, "capture_b rows must have n_labels entries");
      bias.capture_b.insert(bias.capture_b.end(), row.begin(), row.end());
    }
  } else {
    std::vector<double> ratios = {0.25, 0.5, 1.0, 2.0, 4.0};
    if (j.contains("bias") && j["bias"].contains("ratios")) {
      ratios = j["bias"]["ratios"].get<std::vector<double>>();
    }
    bias = make_bias_pattern(n_labels, ratios);
  }

  FlowTable truth_flows = generate_flows(city, spec);
  FlowTable observed_a = observe(truth_flows, bias, city.truth, ObservedDataset::kA, spec.seed);
  FlowTable observed_b = observe(truth_flows, bias, city.truth, ObservedDataset::kB, spec.seed);

  SynthOutputs files =
      write_synth_inputs(city, spec, bias, truth_flows, observed_a, observed_b, out_dir);
  std::printf(
      "synth city: %d zones (+%d undefined), k_true=%d, separation %.1fx noise; "
      "trips true=%llu A=%llu B=%llu\n",
      spec.n_zones, spec.n_undefined, spec.k_true, city.separation_ratio,
      (unsigned long long)truth_flows.total(), (unsigned long long)observed_a.total(),
      (unsigned long long)observed_b.total());
  std::printf("wrote %s\n", files.pipeline_config.c_str());
}

}  // namespace odcmp
