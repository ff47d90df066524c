#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace odcmp {

struct TransparentStringHash {
  using is_transparent = void;
  size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  size_t operator()(const std::string& s) const { return std::hash<std::string_view>{}(s); }
};

template <typename T>
using StringMap = std::unordered_map<std::string, T, TransparentStringHash, std::equal_to<>>;

// One zone share of a spatial unit. Units split across zones carry one entry
// per zone; weights over a unit sum to 1.
struct ZoneShare {
  uint32_t zone = 0;   // index into ZoneRegistry order
  double weight = 1.0;  // in (0, 1]
};

// Analysis zones plus the unit -> zone matching table. Immutable once built;
// safe to share read-only across ingestion workers.
class ZoneRegistry {
 public:
  size_t zone_count() const { return zone_ids_.size(); }
  const std::vector<std::string>& zone_ids() const { return zone_ids_; }
  const std::string& zone_id(uint32_t idx) const { return zone_ids_[idx]; }
  const std::string& zone_name(uint32_t idx) const { return zone_names_[idx]; }
  // Zones can be declared undefined up front (airports, parks) in the zones
  // file; feature aggregation further marks zones that receive no population.
  bool zone_declared_defined(uint32_t idx) const { return zone_defined_[idx] != 0; }

  std::optional<uint32_t> find_zone(std::string_view zone_id) const;

  size_t unit_count() const { return unit_ids_.size(); }
  const std::vector<std::string>& unit_ids() const { return unit_ids_; }
  bool has_unit(std::string_view unit_id) const;

  // The unit's zone entries; weights sum to 1. Throws DataError unknown-unit.
  const std::vector<ZoneShare>& map_unit(std::string_view unit_id) const;

  // Zone carrying the unit's largest weight (ties: lexicographically smallest
  // zone id). Flow records are mapped through this; fractional apportioning
  // would break integer trip counts.
  uint32_t primary_zone(std::string_view unit_id) const;

  struct Builder;  // construction backdoor for the loaders; defined in the .cpp

 private:
  std::vector<std::string> zone_ids_;  // sorted lexicographically
  std::vector<std::string> zone_names_;
  std::vector<uint8_t> zone_defined_;
  StringMap<uint32_t> zone_index_;
  std::vector<std::string> unit_ids_;
  StringMap<std::vector<ZoneShare>> unit_map_;
  StringMap<uint32_t> unit_primary_;
};

// Crosswalk file: CSV `unit_id,zone_id[,weight]`, weight defaults to 1.
// Optional zones file: CSV `zone_id[,name][,defined]` declaring the full zone
// set (zones that appear as flow endpoints but hold no units). When given,
// crosswalk rows referencing zones outside it are an unknown-zone error.
ZoneRegistry load_crosswalk(const std::string& crosswalk_path, const std::string& zones_path = "");

// In-memory construction used by the synthetic generator and tests.
ZoneRegistry build_registry(
    const std::vector<std::tuple<std::string, std::string, double>>& rows,
    const std::vector<std::pair<std::string, std::string>>& declared_zones = {});

enum class ColumnKind : uint8_t {
  kPercent,     // recomputed from counts: 100 * numerator / denominator
  kLevel,       // population-weighted mean of unit values (medianIncome)
  kPopulation,  // the zone population count
  kCount,       // raw count kept only as a denominator
};

std::string_view to_string(ColumnKind kind);

// Unit-level raw counts as loaded from the feature file + sidecar schema.
struct UnitFeatures {
  std::vector<std::string> columns;
  std::vector<ColumnKind> kinds;
  std::vector<int> denominator;  // column index, -1 where not applicable
  int population_column = -1;
  std::vector<std::string> unit_ids;
  std::vector<std::vector<double>> values;  // per unit, one value per column
};

// Schema file: CSV `column,kind[,denominator]` with kind one of
// numerator|level|population|count.
UnitFeatures load_unit_features(const std::string& features_path, const std::string& schema_path);

// Zone-level feature matrix. Percent columns are in [0,100] for defined
// zones; zones that received zero population are undefined and carry NaN.
struct FeatureTable {
  std::vector<std::string> variables;  // percent + level + population columns
  std::vector<ColumnKind> kinds;       // kPercent / kLevel / kPopulation
  std::vector<double> values;          // zone-major, zone_count x variables
  std::vector<uint8_t> defined;        // defined_mask per zone
  std::vector<std::string> notes;      // e.g. level-aggregation approximations

  size_t variable_count() const { return variables.size(); }
  int variable_index(std::string_view name) const;
  double at(uint32_t zone, size_t var) const { return values[zone * variables.size() + var]; }
  bool is_defined(uint32_t zone) const { return defined[zone] != 0; }
  double population(uint32_t zone) const;
  size_t zone_count() const { return variables.empty() ? 0 : values.size() / variables.size(); }
};

// Weight-prorated aggregation of unit counts to zones. Percent variables are
// recomputed from aggregated numerator/denominator, never averaged.
FeatureTable aggregate_features(const ZoneRegistry& registry, const UnitFeatures& units);

void write_zone_features_csv(const std::string& path, const ZoneRegistry& registry,
                             const FeatureTable& features);
void write_zone_features_schema_csv(const std::string& path, const FeatureTable& features);
FeatureTable load_zone_features_csv(const std::string& features_path,
                                    const std::string& schema_path, const ZoneRegistry& registry);

}  // namespace odcmp
