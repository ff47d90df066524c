#include "odcmp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "odcmp/error.hpp"
#include "odcmp/io.hpp"
#include "odcmp/rng.hpp"

namespace odcmp {

const std::vector<std::string> kDemographicVariables = {
    "malePercent",    "age<18Percent", "age>60Percent",    "collegeAbove",
    "poverty",        "unemployment",  "renterPercent",    "noCarPercent",
    "medianIncome",   "noMove",        "housingCostPerc",  "comDriveAlone",
    "comCarpool",     "comPublicTransit", "comWFH",        "comTaxi",
    "comMotorcycle",  "comBikeWalk",   "commute<10min",    "commute10-29min",
    "commute30-59min", "commute>60min", "White",           "Black",
    "Asian",          "Hispanic",      "foreignBorn"};

namespace {

constexpr uint64_t kCityStream = 1;
constexpr uint64_t kFlowStream = 2;
constexpr uint64_t kPanelStream = 3;
constexpr uint64_t kObserveStreamA = 10;
constexpr uint64_t kObserveStreamB = 11;

std::string padded_id(char prefix, int index, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, std::min(width, 12), index);
  return buf;
}

std::string zone_id_of(int index, int width) { return padded_id('z', index, width); }
std::string unit_id_of(int index, int width) { return padded_id('u', index, width); }

double clamp_pct(double v) { return std::min(100.0, std::max(0.0, v)); }

}  // namespace

BiasSpec make_bias_pattern(size_t n_labels, const std::vector<double>& ratios) {
  if (ratios.empty()) throw ConfigError("bias pattern needs at least one ratio");
  BiasSpec bias;
  bias.n_labels = n_labels;
  bias.capture_a.resize(n_labels * n_labels);
  bias.capture_b.resize(n_labels * n_labels);
  for (size_t i = 0; i < n_labels; ++i) {
    for (size_t j = 0; j < n_labels; ++j) {
      double r = ratios[(i * 2 + j * 3) % ratios.size()];
      if (!(r > 0.0)) throw ConfigError("bias ratios must be positive");
      double a = std::min(0.95, 0.45 * std::sqrt(r));
      bias.capture_a[i * n_labels + j] = a;
      bias.capture_b[i * n_labels + j] = a / r;
    }
  }
  return bias;
}

SynthCity generate_city(const SynthSpec& spec) {
  const int n_total = spec.n_zones + spec.n_undefined;
  if (spec.n_zones < 1 || spec.k_true < 1 || spec.n_zones < spec.k_true) {
    throw ConfigError("infeasible synth spec: need n_zones >= k_true >= 1");
  }
  if (spec.population_min < 1 || spec.population_max < spec.population_min) {
    throw ConfigError("infeasible synth spec: bad population range");
  }
  const size_t d = kDemographicVariables.size();

  rng::Stream rng(rng::derive_seed(spec.seed, kCityStream));

  // archetype means/stds
  std::vector<std::vector<double>> means = spec.archetype_means;
  std::vector<std::vector<double>> stds = spec.archetype_stds;
  if (means.empty()) {
    means.assign(spec.k_true, std::vector<double>(d));
    for (int c = 0; c < spec.k_true; ++c) {
      for (size_t v = 0; v < d; ++v) {
        means[c][v] = rng.bernoulli(0.5) ? spec.archetype_scale : -spec.archetype_scale;
      }
    }
  }
  if (stds.empty()) {
    stds.assign(spec.k_true, std::vector<double>(d, spec.noise_std));
  }
  if ((int)means.size() != spec.k_true || (int)stds.size() != spec.k_true) {
    throw ConfigError("archetype matrices must have k_true rows");
  }
  for (int c = 0; c < spec.k_true; ++c) {
    if (means[c].size() != d || stds[c].size() != d) {
      throw ConfigError("archetype rows must cover all demographic variables");
    }
    for (double s : stds[c]) {
      if (!(s > 0.0)) throw ConfigError("archetype stds must be positive");
    }
  }

  double min_dist = std::numeric_limits<double>::infinity();
  double max_std = 0.0;
  for (int a = 0; a < spec.k_true; ++a) {
    for (double s : stds[a]) max_std = std::max(max_std, s);
    for (int b = a + 1; b < spec.k_true; ++b) {
      double dd = 0.0;
      for (size_t v = 0; v < d; ++v) {
        double diff = means[a][v] - means[b][v];
        dd += diff * diff;
      }
      min_dist = std::min(min_dist, std::sqrt(dd));
    }
  }

  SynthCity city;
  city.separation_ratio = spec.k_true > 1 ? min_dist / max_std : 0.0;

  const int width = std::max(3, (int)std::to_string(n_total).size());
  const int income_var = [&] {
    for (size_t v = 0; v < d; ++v) {
      if (kDemographicVariables[v] == "medianIncome") return (int)v;
    }
    return -1;
  }();

  std::vector<std::tuple<std::string, std::string, double>> crosswalk_rows;
  std::vector<std::pair<std::string, std::string>> declared_zones;
  city.unit_features.columns.push_back("population");
  city.unit_features.kinds.push_back(ColumnKind::kPopulation);
  city.unit_features.denominator.push_back(-1);
  city.unit_features.population_column = 0;
  for (size_t v = 0; v < d; ++v) {
    city.unit_features.columns.push_back(kDemographicVariables[v]);
    if ((int)v == income_var) {
      city.unit_features.kinds.push_back(ColumnKind::kLevel);
      city.unit_features.denominator.push_back(-1);
    } else {
      city.unit_features.kinds.push_back(ColumnKind::kPercent);
      city.unit_features.denominator.push_back(0);  // over population
    }
  }

  std::vector<int> truth_labels(n_total, ClusterAssignment::kUndefined);
  city.activity.resize(n_total);
  city.positions.resize(n_total);

  for (int z = 0; z < n_total; ++z) {
    const std::string zid = zone_id_of(z, width);
    const std::string uid = unit_id_of(z, width);
    declared_zones.emplace_back(zid, "Zone " + std::to_string(z));
    crosswalk_rows.emplace_back(uid, zid, 1.0);

    city.positions[z] = {rng.next_double(), rng.next_double()};
    const bool defined = z < spec.n_zones;

    std::vector<double> row(city.unit_features.columns.size(), 0.0);
    if (defined) {
      const int c = z % spec.k_true;
      truth_labels[z] = c;
      int64_t pop = rng.next_in(spec.population_min, spec.population_max);
      city.activity[z] = (double)pop;
      row[0] = (double)pop;
      for (size_t v = 0; v < d; ++v) {
        double val = means[c][v] + stds[c][v] * rng.normal();
        if ((int)v == income_var) {
          row[1 + v] = std::max(1000.0, 60000.0 + 25000.0 * val);
        } else {
          double pct = clamp_pct(50.0 + 15.0 * val);
          row[1 + v] = std::round(pct / 100.0 * (double)pop);
        }
      }
    } else {
      // parks and airports: no residents, but plenty of gravity mass
      city.activity[z] = (double)rng.next_in(spec.population_min, spec.population_max);
    }
    city.unit_features.unit_ids.push_back(uid);
    city.unit_features.values.push_back(std::move(row));
  }

  // optional split units exercising fractional crosswalk weights
  for (int s = 0; s < spec.split_units; ++s) {
    if (spec.n_zones < 2) break;
    const std::string uid = padded_id('s', s, width);
    int za = (int)rng.next_below((uint64_t)spec.n_zones);
    int zb = (za + 1) % spec.n_zones;
    double w = 0.25 + 0.5 * rng.next_double();
    crosswalk_rows.emplace_back(uid, zone_id_of(za, width), w);
    crosswalk_rows.emplace_back(uid, zone_id_of(zb, width), 1.0 - w);
    std::vector<double> row(city.unit_features.columns.size(), 0.0);
    row[0] = 40.0;  // tiny population: negligible against archetype structure
    city.unit_features.unit_ids.push_back(uid);
    city.unit_features.values.push_back(std::move(row));
  }

  city.registry = build_registry(crosswalk_rows, declared_zones);
  city.features = aggregate_features(city.registry, city.unit_features);

  city.truth.k = spec.k_true;
  city.truth.labels.assign(city.registry.zone_count(), ClusterAssignment::kUnassigned);
  for (int z = 0; z < n_total; ++z) {
    uint32_t idx = *city.registry.find_zone(zone_id_of(z, width));
    city.truth.labels[idx] = truth_labels[z];
  }
  return city;
}

FlowTable generate_flows(const SynthCity& city, const SynthSpec& spec) {
  const size_t n = city.registry.zone_count();
  std::vector<double> intensity(n * n, 0.0);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      double dx = city.positions[i].first - city.positions[j].first;
      double dy = city.positions[i].second - city.positions[j].second;
      double dist = std::sqrt(dx * dx + dy * dy);
      double v = city.activity[i] * city.activity[j] /
                 std::pow(1.0 + dist / 0.3, spec.distance_decay);
      intensity[i * n + j] = v;
      sum += v;
    }
  }
  FlowTable table("truth", (uint32_t)n);
  if (sum <= 0.0 || spec.total_trips == 0) return table;

  rng::Stream rng(rng::derive_seed(spec.seed, kFlowStream));
  const double scale = (double)spec.total_trips / sum;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      uint64_t c = rng.poisson(intensity[i * n + j] * scale);
      if (c) table.add((uint32_t)i, (uint32_t)j, c);
    }
  }
  table.rejects().accepted = table.total();
  return table;
}

FlowTable observe(const FlowTable& flows, const BiasSpec& bias, const ClusterAssignment& truth,
                  ObservedDataset which, uint64_t seed) {
  auto label_row = [&](uint32_t zone) -> size_t {
    if (zone >= truth.labels.size() || truth.labels[zone] == ClusterAssignment::kUnassigned) {
      throw DataError("unassigned-zone", "zone index " + std::to_string(zone) + " has no label");
    }
    int label = truth.labels[zone];
    size_t row = label == ClusterAssignment::kUndefined ? (size_t)truth.k : (size_t)label;
    if (row >= bias.n_labels) {
      throw DataError("missing-capture", "no capture probability for cluster row " +
                                             std::to_string(row));
    }
    return row;
  };

  rng::Stream rng(rng::derive_seed(
      seed, which == ObservedDataset::kA ? kObserveStreamA : kObserveStreamB));
  FlowTable out(which == ObservedDataset::kA ? "A" : "B", flows.n_zones());
  for (const auto& cell : flows.sorted_cells()) {
    size_t i = label_row(cell.origin);
    size_t j = label_row(cell.dest);
    double p = which == ObservedDataset::kA ? bias.a(i, j) : bias.b(i, j);
    if (p < 0.0 || p > 1.0) {
      throw DataError("missing-capture", "capture probability outside [0,1]");
    }
    uint64_t kept = rng.binomial(cell.count, p);
    if (kept) out.add(cell.origin, cell.dest, kept);
  }
  out.rejects().accepted = out.total();
  return out;
}

std::vector<double> expected_lrfr(const BiasSpec& bias, const ClusterODMatrix& true_flows) {
  const size_t n = true_flows.size();
  if (n != bias.n_labels) {
    throw DataError("shape-mismatch", "bias labels do not match the true flow matrix");
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      sum_a += bias.a(i, j) * (double)true_flows.at(i, j);
      sum_b += bias.b(i, j) * (double)true_flows.at(i, j);
    }
  }
  if (!(sum_a > 0.0) || !(sum_b > 0.0)) {
    throw DataError("zero-expected-cell", "expected totals must be positive");
  }
  const double offset = std::log2(sum_b / sum_a);
  std::vector<double> out(n * n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (true_flows.at(i, j) == 0 || !(bias.a(i, j) > 0.0) || !(bias.b(i, j) > 0.0)) {
        throw DataError("zero-expected-cell",
                        "cell (" + std::to_string(i) + "," + std::to_string(j) +
                            ") has zero expected flow");
      }
      out[i * n + j] = std::log2(bias.a(i, j) / bias.b(i, j)) + offset;
    }
  }
  return out;
}

namespace {

// observed zone flows -> taxi-style rows, one per trip, days cycling through
// the window
void write_taxi_csv(const std::string& path, const FlowTable& flows, const ZoneRegistry& registry,
                    const DateRange& window) {
  std::string out;
  out.reserve(1 << 20);
  out += "pickup_datetime,PULocationID,DOLocationID\n";
  const int32_t days = window.size();
  for (const auto& cell : flows.sorted_cells()) {
    const std::string& o = registry.zone_id(cell.origin);
    const std::string& d = registry.zone_id(cell.dest);
    for (uint64_t t = 0; t < cell.count; ++t) {
      out += format_date(window.start + (int32_t)(t % (uint64_t)days));
      out += " 12:00:00,";
      out += o;
      out += ',';
      out += d;
      out += '\n';
    }
  }
  write_file(path, out);
}

// observed zone flows -> device-style rows: per (day, origin unit) a JSON map
// of destination unit -> count, cell counts split evenly over the window
void write_device_csv(const std::string& path, const FlowTable& flows,
                      const ZoneRegistry& registry, const DateRange& window) {
  std::ostringstream out;
  out << "date,origin_census_block_group,destination_cbgs\n";
  const int32_t days = window.size();
  auto unit_of = [&](uint32_t zone) {
    std::string uid = registry.zone_id(zone);
    uid[0] = 'u';  // generator names units after their zones
    return uid;
  };

  auto cells = flows.sorted_cells();
  size_t begin = 0;
  while (begin < cells.size()) {
    size_t end = begin;
    while (end < cells.size() && cells[end].origin == cells[begin].origin) ++end;
    for (int32_t day = 0; day < days; ++day) {
      std::string dests;
      for (size_t i = begin; i < end; ++i) {
        uint64_t base = cells[i].count / (uint64_t)days;
        uint64_t extra = (uint64_t)day < cells[i].count % (uint64_t)days ? 1 : 0;
        uint64_t c = base + extra;
        if (!c) continue;
        if (!dests.empty()) dests += ',';
        dests += "\"\"" + unit_of(cells[i].dest) + "\"\":" + std::to_string(c);
      }
      if (dests.empty()) continue;
      out << format_date(window.start + day) << ',' << unit_of(cells[begin].origin) << ",\"{"
          << dests << "}\"\n";
    }
    begin = end;
  }
  write_file(path, out.str());
}

void write_panel_csv(const std::string& path, const SynthCity& city, const SynthSpec& spec) {
  rng::Stream rng(rng::derive_seed(spec.seed, kPanelStream));
  const int32_t m_start = parse_month(format_date(spec.window.start).substr(0, 7));
  const int32_t m_end = parse_month(format_date(spec.window.end).substr(0, 7));
  std::ostringstream out;
  out << "census_block_group,month,number_devices_residing,number_devices_primary_daytime\n";
  for (uint32_t z = 0; z < city.registry.zone_count(); ++z) {
    std::string uid = city.registry.zone_id(z);
    uid[0] = 'u';  // one unit per zone, named after it (split units carry no panel)
    const bool defined = city.features.is_defined(z);
    double pop = defined ? city.features.population(z) : 0.0;
    for (int32_t m = m_start; m <= m_end; ++m) {
      double jitter_n = 1.0 + 0.05 * rng.normal();
      double jitter_d = 1.0 + 0.05 * rng.normal();
      double residing = defined ? std::max(0.0, pop * spec.device_rate_night * jitter_n) : 0.0;
      double daytime = defined ? std::max(0.0, pop * spec.device_rate_day * jitter_d)
                               : std::max(0.0, city.activity[z] * spec.device_rate_day * jitter_d);
      out << uid << ',' << format_month(m) << ',' << format_double(residing) << ','
          << format_double(daytime) << '\n';
    }
  }
  write_file(path, out.str());
}

}  // namespace

SynthOutputs write_synth_inputs(const SynthCity& city, const SynthSpec& spec, const BiasSpec& bias,
                                const FlowTable& truth_flows, const FlowTable& observed_a,
                                const FlowTable& observed_b, const std::string& out_dir) {
  SynthOutputs files;
  auto path = [&](const std::string& name) { return out_dir + "/" + name; };

  files.crosswalk = path("crosswalk.csv");
  {
    std::ostringstream out;
    out << "unit_id,zone_id,weight\n";
    for (const auto& unit : city.registry.unit_ids()) {
      for (const auto& share : city.registry.map_unit(unit)) {
        out << unit << ',' << city.registry.zone_id(share.zone) << ',' << format_double(share.weight)
            << '\n';
      }
    }
    write_file(files.crosswalk, out.str());
  }

  files.zones = path("zones.csv");
  {
    std::ostringstream out;
    out << "zone_id,name\n";
    for (uint32_t z = 0; z < city.registry.zone_count(); ++z) {
      out << city.registry.zone_id(z) << ',' << city.registry.zone_name(z) << '\n';
    }
    write_file(files.zones, out.str());
  }

  files.features = path("features.csv");
  {
    std::ostringstream out;
    out << "unit_id";
    for (const auto& c : city.unit_features.columns) out << ',' << c;
    out << '\n';
    for (size_t u = 0; u < city.unit_features.unit_ids.size(); ++u) {
      out << city.unit_features.unit_ids[u];
      for (double v : city.unit_features.values[u]) out << ',' << format_double(v);
      out << '\n';
    }
    write_file(files.features, out.str());
  }

  files.features_schema = path("features_schema.csv");
  {
    std::ostringstream out;
    out << "column,kind,denominator\n";
    for (size_t c = 0; c < city.unit_features.columns.size(); ++c) {
      ColumnKind kind = city.unit_features.kinds[c];
      out << city.unit_features.columns[c] << ','
          << (kind == ColumnKind::kPercent ? "numerator" : to_string(kind)) << ',';
      if (city.unit_features.denominator[c] >= 0) {
        out << city.unit_features.columns[(size_t)city.unit_features.denominator[c]];
      }
      out << '\n';
    }
    write_file(files.features_schema, out.str());
  }

  files.taxi = path("taxi.csv");
  write_taxi_csv(files.taxi, observed_a, city.registry, spec.window);

  files.device = path("device.csv");
  write_device_csv(files.device, observed_b, city.registry, spec.window);

  files.panel = path("panel.csv");
  write_panel_csv(files.panel, city, spec);

  files.true_clusters = path("truth/true_clusters.csv");
  write_clusters_csv(files.true_clusters, city.truth, city.registry);

  files.true_flows = path("truth/true_flows.csv");
  write_flow_table_csv(files.true_flows, truth_flows, city.registry);

  files.expected_lrfr_csv = path("truth/expected_lrfr.csv");
  {
    ClusterODMatrix true_matrix = build_cluster_matrix(truth_flows, city.truth);
    auto expected = expected_lrfr(bias, true_matrix);
    std::ostringstream out;
    out << "origin";
    for (const auto& l : true_matrix.labels) out << ',' << l;
    out << '\n';
    for (size_t i = 0; i < true_matrix.size(); ++i) {
      out << true_matrix.labels[i];
      for (size_t j = 0; j < true_matrix.size(); ++j) {
        out << ',' << format_double(expected[i * true_matrix.size() + j]);
      }
      out << '\n';
    }
    write_file(files.expected_lrfr_csv, out.str());
  }

  files.meta = path("truth/meta.json");
  {
    nlohmann::json meta;
    meta["seed"] = spec.seed;
    meta["k_true"] = spec.k_true;
    meta["n_zones"] = spec.n_zones;
    meta["n_undefined"] = spec.n_undefined;
    meta["separation_ratio"] = city.separation_ratio;
    meta["total_trips_true"] = truth_flows.total();
    meta["total_trips_a"] = observed_a.total();
    meta["total_trips_b"] = observed_b.total();
    meta["capture_a"] = bias.capture_a;
    meta["capture_b"] = bias.capture_b;
    meta["bias_labels"] = bias.n_labels;
    write_file(files.meta, meta.dump(2) + "\n");
  }

  files.pipeline_config = path("pipeline_config.json");
  {
    nlohmann::json cfg;
    cfg["crosswalk"] = files.crosswalk;
    cfg["zones"] = files.zones;
    cfg["features"] = files.features;
    cfg["features_schema"] = files.features_schema;
    cfg["datasets"] = nlohmann::json::array(
        {{{"id", "taxi"}, {"kind", "taxi"}, {"path", files.taxi}},
         {{"id", "device"}, {"kind", "device"}, {"path", files.device}}});
    cfg["panel"] = files.panel;
    cfg["window"] = {{"start", format_date(spec.window.start)}, {"end", format_date(spec.window.end)}};
    cfg["panel_window"] = {{"start", format_date(spec.window.start).substr(0, 7)},
                           {"end", format_date(spec.window.end).substr(0, 7)}};
    cfg["k_range"] = {2, std::min<int>(8, spec.n_zones)};
    cfg["seed"] = spec.seed;
    cfg["out"] = out_dir + "/out";
    write_file(files.pipeline_config, cfg.dump(2) + "\n");
  }
  return files;
}

}  // namespace odcmp
