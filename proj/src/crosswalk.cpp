#include "odcmp/crosswalk.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "odcmp/error.hpp"
#include "odcmp/io.hpp"

namespace odcmp {

namespace {

constexpr double kWeightSumTol = 1e-9;

struct RawRow {
  std::string unit;
  std::string zone;
  double weight;
};

struct DeclaredZone {
  std::string id;
  std::string name;
  bool defined = true;
};

}  // namespace

struct ZoneRegistry::Builder {
  static ZoneRegistry build(const std::vector<RawRow>& rows,
                            const std::vector<DeclaredZone>& declared);
};

ZoneRegistry ZoneRegistry::Builder::build(const std::vector<RawRow>& rows,
                                          const std::vector<DeclaredZone>& declared) {
  ZoneRegistry reg;

  std::set<std::string> zone_set;
  StringMap<std::pair<std::string, bool>> meta;  // id -> (name, defined)
  for (const auto& z : declared) {
    if (!zone_set.insert(z.id).second) throw DataError("duplicate-row", "zone '" + z.id + "' declared twice");
    meta.emplace(z.id, std::make_pair(z.name.empty() ? z.id : z.name, z.defined));
  }
  const bool closed_zone_set = !declared.empty();
  for (const auto& r : rows) {
    if (closed_zone_set) {
      if (!zone_set.count(r.zone)) {
        throw DataError("unknown-zone",
                        "crosswalk references zone '" + r.zone + "' not in the declared zone set");
      }
    } else {
      zone_set.insert(r.zone);
    }
  }

  reg.zone_ids_.assign(zone_set.begin(), zone_set.end());  // sorted
  reg.zone_names_.reserve(reg.zone_ids_.size());
  reg.zone_defined_.reserve(reg.zone_ids_.size());
  for (uint32_t i = 0; i < reg.zone_ids_.size(); ++i) {
    const auto& id = reg.zone_ids_[i];
    auto it = meta.find(id);
    reg.zone_names_.push_back(it != meta.end() ? it->second.first : id);
    reg.zone_defined_.push_back(it != meta.end() ? (it->second.second ? 1 : 0) : 1);
    reg.zone_index_.emplace(id, i);
  }

  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (const auto& r : rows) {
    if (!(r.weight > 0.0) || r.weight > 1.0 + kWeightSumTol) {
      throw DataError("bad-weight", "unit '" + r.unit + "' zone '" + r.zone + "' weight " +
                                        format_double(r.weight) + " outside (0,1]");
    }
    if (!seen.emplace(r.unit, r.zone).second) {
      throw DataError("duplicate-row", "duplicate crosswalk row (" + r.unit + "," + r.zone + ")");
    }
    uint32_t zidx = reg.zone_index_.find(r.zone)->second;
    reg.unit_map_[r.unit].push_back(ZoneShare{zidx, r.weight});
  }

  for (auto& [unit, shares] : reg.unit_map_) {
    double sum = 0.0;
    for (const auto& s : shares) sum += s.weight;
    if (std::fabs(sum - 1.0) > kWeightSumTol) {
      throw DataError("weight-sum-violation",
                      "unit '" + unit + "' weights sum to " + format_double(sum));
    }
    // primary = largest weight, ties broken toward the smallest zone id;
    // zone indices are in sorted id order so the index tie-break suffices
    std::sort(shares.begin(), shares.end(), [](const ZoneShare& a, const ZoneShare& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return a.zone < b.zone;
    });
    reg.unit_primary_.emplace(unit, shares.front().zone);
    reg.unit_ids_.push_back(unit);
  }
  std::sort(reg.unit_ids_.begin(), reg.unit_ids_.end());
  return reg;
}

std::optional<uint32_t> ZoneRegistry::find_zone(std::string_view zone_id) const {
  auto it = zone_index_.find(zone_id);
  if (it == zone_index_.end()) return std::nullopt;
  return it->second;
}

bool ZoneRegistry::has_unit(std::string_view unit_id) const {
  return unit_map_.find(unit_id) != unit_map_.end();
}

const std::vector<ZoneShare>& ZoneRegistry::map_unit(std::string_view unit_id) const {
  auto it = unit_map_.find(unit_id);
  if (it == unit_map_.end()) {
    throw DataError("unknown-unit", "unit '" + std::string(unit_id) + "' not in crosswalk");
  }
  return it->second;
}

uint32_t ZoneRegistry::primary_zone(std::string_view unit_id) const {
  auto it = unit_primary_.find(unit_id);
  if (it == unit_primary_.end()) {
    throw DataError("unknown-unit", "unit '" + std::string(unit_id) + "' not in crosswalk");
  }
  return it->second;
}

ZoneRegistry load_crosswalk(const std::string& crosswalk_path, const std::string& zones_path) {
  std::vector<DeclaredZone> declared;
  if (!zones_path.empty()) {
    CsvFile zf(zones_path);
    int c_id = zf.require_column("zone_id");
    int c_name = zf.column("name");
    int c_def = zf.column("defined");
    CsvRow row;
    while (zf.next(row)) {
      DeclaredZone z;
      z.id = std::string(row.fields.at(c_id));
      if (c_name >= 0 && (size_t)c_name < row.fields.size()) z.name = std::string(row.fields[c_name]);
      if (c_def >= 0 && (size_t)c_def < row.fields.size()) {
        auto f = row.fields[c_def];
        z.defined = !(f == "0" || f == "false" || f == "no");
      }
      declared.push_back(std::move(z));
    }
  }

  CsvFile cf(crosswalk_path);
  int c_unit = cf.require_column("unit_id");
  int c_zone = cf.require_column("zone_id");
  int c_weight = cf.column("weight");
  std::vector<RawRow> rows;
  CsvRow row;
  while (cf.next(row)) {
    RawRow r;
    if ((size_t)c_unit >= row.fields.size() || (size_t)c_zone >= row.fields.size()) {
      throw DataError("malformed-row",
                      crosswalk_path + ":" + std::to_string(cf.line_number()) + ": too few fields");
    }
    r.unit = std::string(row.fields[c_unit]);
    r.zone = std::string(row.fields[c_zone]);
    r.weight = 1.0;
    if (c_weight >= 0 && (size_t)c_weight < row.fields.size() && !row.fields[c_weight].empty()) {
      if (!parse_double(row.fields[c_weight], r.weight)) {
        throw DataError("malformed-row", crosswalk_path + ":" + std::to_string(cf.line_number()) +
                                             ": bad weight '" + std::string(row.fields[c_weight]) + "'");
      }
    }
    if (r.unit.empty() || r.zone.empty()) {
      throw DataError("malformed-row",
                      crosswalk_path + ":" + std::to_string(cf.line_number()) + ": empty id");
    }
    rows.push_back(std::move(r));
  }
  return ZoneRegistry::Builder::build(rows, declared);
}

ZoneRegistry build_registry(
    const std::vector<std::tuple<std::string, std::string, double>>& rows,
    const std::vector<std::pair<std::string, std::string>>& declared_zones) {
  std::vector<RawRow> raw;
  raw.reserve(rows.size());
  for (const auto& [u, z, w] : rows) raw.push_back(RawRow{u, z, w});
  std::vector<DeclaredZone> declared;
  declared.reserve(declared_zones.size());
  for (const auto& [id, name] : declared_zones) declared.push_back(DeclaredZone{id, name, true});
  return ZoneRegistry::Builder::build(raw, declared);
}

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kPercent: return "percent";
    case ColumnKind::kLevel: return "level";
    case ColumnKind::kPopulation: return "population";
    case ColumnKind::kCount: return "count";
  }
  return "?";
}

UnitFeatures load_unit_features(const std::string& features_path, const std::string& schema_path) {
  UnitFeatures uf;

  // schema rows: column,kind[,denominator]
  struct SchemaRow {
    std::string column;
    std::string kind;
    std::string denominator;
  };
  std::vector<SchemaRow> schema;
  {
    CsvFile sf(schema_path);
    int c_col = sf.require_column("column");
    int c_kind = sf.require_column("kind");
    int c_den = sf.column("denominator");
    CsvRow row;
    while (sf.next(row)) {
      SchemaRow s;
      s.column = std::string(row.fields.at(c_col));
      s.kind = std::string(row.fields.at(c_kind));
      if (c_den >= 0 && (size_t)c_den < row.fields.size()) s.denominator = std::string(row.fields[c_den]);
      schema.push_back(std::move(s));
    }
  }
  if (schema.empty()) throw DataError("empty-file", "schema '" + schema_path + "' has no rows");

  StringMap<int> col_index;
  for (const auto& s : schema) {
    if (col_index.count(s.column)) throw DataError("duplicate-row", "schema column '" + s.column + "' declared twice");
    col_index.emplace(s.column, (int)uf.columns.size());
    uf.columns.push_back(s.column);
    if (s.kind == "numerator") {
      uf.kinds.push_back(ColumnKind::kPercent);
    } else if (s.kind == "level") {
      uf.kinds.push_back(ColumnKind::kLevel);
    } else if (s.kind == "population") {
      uf.kinds.push_back(ColumnKind::kPopulation);
    } else if (s.kind == "count") {
      uf.kinds.push_back(ColumnKind::kCount);
    } else {
      throw DataError("bad-schema", "unknown kind '" + s.kind + "' for column '" + s.column + "'");
    }
    uf.denominator.push_back(-1);
  }
  for (size_t i = 0; i < schema.size(); ++i) {
    if (uf.kinds[i] == ColumnKind::kPopulation) {
      if (uf.population_column >= 0) throw DataError("bad-schema", "two population columns declared");
      uf.population_column = (int)i;
    }
    if (uf.kinds[i] == ColumnKind::kPercent) {
      if (schema[i].denominator.empty()) {
        throw DataError("missing-denominator",
                        "numerator column '" + schema[i].column + "' has no denominator");
      }
      auto it = col_index.find(schema[i].denominator);
      if (it == col_index.end()) {
        throw DataError("missing-denominator", "denominator '" + schema[i].denominator +
                                                   "' of '" + schema[i].column + "' not declared");
      }
      ColumnKind dk = uf.kinds[it->second];
      if (dk != ColumnKind::kPopulation && dk != ColumnKind::kCount) {
        throw DataError("bad-schema", "denominator '" + schema[i].denominator +
                                          "' must be a population or count column");
      }
      uf.denominator[i] = it->second;
    }
  }
  if (uf.population_column < 0) throw DataError("bad-schema", "schema declares no population column");

  CsvFile ff(features_path);
  int c_unit = ff.require_column("unit_id");
  std::vector<int> csv_col(uf.columns.size());
  for (size_t i = 0; i < uf.columns.size(); ++i) csv_col[i] = ff.require_column(uf.columns[i]);

  StringMap<uint8_t> seen;
  CsvRow row;
  while (ff.next(row)) {
    std::string unit = std::string(row.fields.at(c_unit));
    if (!seen.emplace(unit, 1).second) {
      throw DataError("duplicate-row", "unit '" + unit + "' appears twice in " + features_path);
    }
    std::vector<double> vals(uf.columns.size());
    for (size_t i = 0; i < uf.columns.size(); ++i) {
      if ((size_t)csv_col[i] >= row.fields.size() || !parse_double(row.fields[csv_col[i]], vals[i])) {
        throw DataError("malformed-row", features_path + ":" + std::to_string(ff.line_number()) +
                                             ": bad value in column '" + uf.columns[i] + "'");
      }
      if (uf.kinds[i] != ColumnKind::kLevel && vals[i] < 0.0) {
        throw DataError("negative-count", features_path + ":" + std::to_string(ff.line_number()) +
                                              ": column '" + uf.columns[i] + "'");
      }
    }
    uf.unit_ids.push_back(std::move(unit));
    uf.values.push_back(std::move(vals));
  }
  return uf;
}

int FeatureTable::variable_index(std::string_view name) const {
  for (size_t i = 0; i < variables.size(); ++i) {
    if (variables[i] == name) return (int)i;
  }
  return -1;
}

double FeatureTable::population(uint32_t zone) const {
  for (size_t i = 0; i < variables.size(); ++i) {
    if (kinds[i] == ColumnKind::kPopulation) return at(zone, i);
  }
  throw DataError("missing-column", "feature table has no population column");
}

FeatureTable aggregate_features(const ZoneRegistry& registry, const UnitFeatures& units) {
  const size_t n_zones = registry.zone_count();
  const size_t n_cols = units.columns.size();
  const int pop_col = units.population_column;

  // weight-prorated sums of all count-like columns, plus weighted level sums
  std::vector<double> sums(n_zones * n_cols, 0.0);
  std::vector<double> level_weight(n_zones * n_cols, 0.0);

  for (size_t u = 0; u < units.unit_ids.size(); ++u) {
    const auto& shares = registry.map_unit(units.unit_ids[u]);  // throws unknown-unit
    const auto& vals = units.values[u];
    for (const auto& share : shares) {
      for (size_t c = 0; c < n_cols; ++c) {
        if (units.kinds[c] == ColumnKind::kLevel) {
          double w = vals[(size_t)pop_col] * share.weight;
          sums[share.zone * n_cols + c] += vals[c] * w;
          level_weight[share.zone * n_cols + c] += w;
        } else {
          sums[share.zone * n_cols + c] += vals[c] * share.weight;
        }
      }
    }
  }

  FeatureTable ft;
  std::vector<size_t> out_cols;
  for (size_t c = 0; c < n_cols; ++c) {
    if (units.kinds[c] == ColumnKind::kCount) continue;  // denominators only
    out_cols.push_back(c);
    ft.variables.push_back(units.columns[c]);
    ft.kinds.push_back(units.kinds[c]);
    if (units.kinds[c] == ColumnKind::kLevel) {
      ft.notes.push_back(units.columns[c] +
                         " aggregated as population-weighted mean of unit values (approximation)");
    }
  }

  const double nan = std::nan("");
  ft.values.assign(n_zones * ft.variables.size(), nan);
  ft.defined.assign(n_zones, 0);

  for (uint32_t z = 0; z < n_zones; ++z) {
    double pop = sums[z * n_cols + pop_col];
    bool defined = pop > 0.0 && registry.zone_declared_defined(z);
    ft.defined[z] = defined ? 1 : 0;
    if (!defined) continue;
    for (size_t oc = 0; oc < out_cols.size(); ++oc) {
      size_t c = out_cols[oc];
      double v;
      switch (units.kinds[c]) {
        case ColumnKind::kPercent: {
          double num = sums[z * n_cols + c];
          double den = sums[z * n_cols + (size_t)units.denominator[c]];
          if (den <= 0.0) {
            if (num > 0.0) {
              throw DataError("percent-out-of-range", "zone '" + registry.zone_id(z) +
                                                          "' column '" + units.columns[c] +
                                                          "': numerator without denominator");
            }
            v = 0.0;
          } else {
            v = 100.0 * num / den;
            if (v > 100.0 + 1e-9) {
              throw DataError("percent-out-of-range", "zone '" + registry.zone_id(z) +
                                                          "' column '" + units.columns[c] + "' = " +
                                                          format_double(v));
            }
            v = std::min(v, 100.0);
          }
          break;
        }
        case ColumnKind::kLevel: {
          double w = level_weight[z * n_cols + c];
          v = w > 0.0 ? sums[z * n_cols + c] / w : 0.0;
          break;
        }
        default:
          v = sums[z * n_cols + c];
      }
      ft.values[z * ft.variables.size() + oc] = v;
    }
  }
  return ft;
}

void write_zone_features_csv(const std::string& path, const ZoneRegistry& registry,
                             const FeatureTable& features) {
  std::ostringstream out;
  out << "zone_id,defined";
  for (const auto& v : features.variables) out << ',' << v;
  out << '\n';
  for (uint32_t z = 0; z < registry.zone_count(); ++z) {
    out << registry.zone_id(z) << ',' << (features.is_defined(z) ? 1 : 0);
    for (size_t c = 0; c < features.variables.size(); ++c) {
      out << ',';
      if (features.is_defined(z)) out << format_double(features.at(z, c));
    }
    out << '\n';
  }
  write_file(path, out.str());
}

void write_zone_features_schema_csv(const std::string& path, const FeatureTable& features) {
  std::ostringstream out;
  out << "variable,kind\n";
  for (size_t c = 0; c < features.variables.size(); ++c) {
    out << features.variables[c] << ',' << to_string(features.kinds[c]) << '\n';
  }
  write_file(path, out.str());
}

FeatureTable load_zone_features_csv(const std::string& features_path,
                                    const std::string& schema_path, const ZoneRegistry& registry) {
  FeatureTable ft;
  {
    CsvFile sf(schema_path);
    int c_var = sf.require_column("variable");
    int c_kind = sf.require_column("kind");
    CsvRow row;
    while (sf.next(row)) {
      ft.variables.emplace_back(row.fields.at(c_var));
      auto k = row.fields.at(c_kind);
      if (k == "percent") ft.kinds.push_back(ColumnKind::kPercent);
      else if (k == "level") ft.kinds.push_back(ColumnKind::kLevel);
      else if (k == "population") ft.kinds.push_back(ColumnKind::kPopulation);
      else throw DataError("bad-schema", "unknown kind '" + std::string(k) + "' in " + schema_path);
    }
  }

  const double nan = std::nan("");
  ft.values.assign(registry.zone_count() * ft.variables.size(), nan);
  ft.defined.assign(registry.zone_count(), 0);

  CsvFile ff(features_path);
  int c_zone = ff.require_column("zone_id");
  int c_def = ff.require_column("defined");
  std::vector<int> cols(ft.variables.size());
  for (size_t i = 0; i < ft.variables.size(); ++i) cols[i] = ff.require_column(ft.variables[i]);
  CsvRow row;
  while (ff.next(row)) {
    auto zid = row.fields.at(c_zone);
    auto z = registry.find_zone(zid);
    if (!z) throw DataError("unknown-zone", "zone '" + std::string(zid) + "' in " + features_path);
    bool defined = row.fields.at(c_def) == "1";
    ft.defined[*z] = defined ? 1 : 0;
    if (!defined) continue;
    for (size_t i = 0; i < cols.size(); ++i) {
      double v;
      if ((size_t)cols[i] >= row.fields.size() || !parse_double(row.fields[cols[i]], v)) {
        throw DataError("malformed-row", features_path + ":" + std::to_string(ff.line_number()) +
                                             ": bad value for '" + ft.variables[i] + "'");
      }
      ft.values[*z * ft.variables.size() + i] = v;
    }
  }
  return ft;
}

}  // namespace odcmp
