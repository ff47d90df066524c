#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "odcmp/crosswalk.hpp"
#include "odcmp/dates.hpp"

namespace odcmp {

// One flow observation after unit->zone mapping of a raw input row/entry.
struct FlowRecord {
  uint32_t origin_zone = 0;
  uint32_t dest_zone = 0;
  uint64_t count = 1;
  int32_t day = 0;
};

// Dropped-record accounting. `reasons` drives the schema-drift abort
// threshold; `samples` holds a few raw lines for diagnostics (samples are not
// part of table equality: which worker sees a bad line first is arbitrary).
struct RejectLog {
  uint64_t accepted = 0;
  uint64_t rejected = 0;
  std::map<std::string, uint64_t> reasons;
  std::vector<std::string> samples;

  static constexpr size_t kMaxSamples = 8;
  void reject(std::string_view reason, std::string_view context);
  void merge(const RejectLog& other);
  uint64_t reason_count(std::string_view reason) const;
  // out-of-window and self-excluded drops are expected filtering, not drift
  static bool counts_toward_threshold(std::string_view reason);
  uint64_t threshold_relevant() const;
};

struct FlowCell {
  uint32_t origin = 0;
  uint32_t dest = 0;
  uint64_t count = 0;
  friend bool operator==(const FlowCell&, const FlowCell&) = default;
};

// Sparse zone x zone trip counts for one dataset. total == sum of cells by
// construction (integer arithmetic throughout). Merge is cellwise sum, so any
// partitioning of the input stream yields the same table.
class FlowTable {
 public:
  FlowTable() = default;
  FlowTable(std::string dataset_id, uint32_t n_zones)
      : dataset_id_(std::move(dataset_id)), n_zones_(n_zones) {}

  const std::string& dataset_id() const { return dataset_id_; }
  uint32_t n_zones() const { return n_zones_; }
  uint64_t total() const { return total_; }

  void add(uint32_t origin, uint32_t dest, uint64_t count);
  void add_by_day(int32_t day, uint32_t origin, uint32_t dest, uint64_t count);
  uint64_t cell(uint32_t origin, uint32_t dest) const;
  const std::unordered_map<uint64_t, uint64_t>& cells() const { return cells_; }
  std::vector<FlowCell> sorted_cells() const;

  RejectLog& rejects() { return rejects_; }
  const RejectLog& rejects() const { return rejects_; }

  bool has_by_day() const { return !by_day_.empty(); }
  const std::map<int32_t, std::unordered_map<uint64_t, uint64_t>>& by_day() const { return by_day_; }

  // Equality covers identity, cells, totals and reject counts (not samples).
  friend bool operator==(const FlowTable& a, const FlowTable& b);

  static uint64_t pack(uint32_t origin, uint32_t dest) {
    return (uint64_t)origin << 32 | dest;
  }

 private:
  std::string dataset_id_;
  uint32_t n_zones_ = 0;
  std::unordered_map<uint64_t, uint64_t> cells_;
  uint64_t total_ = 0;
  RejectLog rejects_;
  std::map<int32_t, std::unordered_map<uint64_t, uint64_t>> by_day_;
};

// Cellwise integer sum; reject logs concatenate. Throws DataError
// dataset-id-mismatch when the two tables disagree on identity or zone count.
FlowTable merge_flow_tables(const FlowTable& a, const FlowTable& b);

struct TaxiColumns {
  std::string pickup_datetime = "pickup_datetime";
  std::string pickup_zone = "PULocationID";
  std::string dropoff_zone = "DOLocationID";
  std::string passenger_count = "passenger_count";
};

struct IngestOptions {
  DateRange window;
  int workers = 0;  // 0 = all available
  double reject_threshold = 0.05;
  bool include_self = true;        // device style: keep same-unit stays
  bool passenger_weighted = false; // taxi style: count passengers, not trips
  bool per_day = false;            // retain per-day cell tables
  TaxiColumns taxi_columns;
};

// Taxi-style ingestion: CSV rows carrying pickup datetime and origin/dest
// zone ids. Reads the file in blocks, hands line slices to OpenMP workers
// with private accumulators, and merges in slice order; the result is
// bit-identical for any worker count or record order. Peak memory is
// O(zones^2 * workers + block), never O(records).
FlowTable ingest_od_trips(const std::string& path, const ZoneRegistry& registry,
                          const IngestOptions& options, const std::string& dataset_id);

// Line-at-a-time reference implementation with identical semantics; kept for
// differential tests and the benchmark baseline.
FlowTable ingest_od_trips_serial(const std::string& path, const ZoneRegistry& registry,
                                 const IngestOptions& options, const std::string& dataset_id);

// Device-style ingestion: CSV rows (date, origin unit, JSON map of dest unit
// -> device count). Units map to zones through the registry (primary zone);
// units outside the registry are dropped as the spatial filter. A "record"
// for accounting purposes is one destination entry.
FlowTable ingest_unit_flows(const std::string& path, const ZoneRegistry& registry,
                            const IngestOptions& options, const std::string& dataset_id);

// Per-unit monthly device counts from the home panel summary.
class DevicePanel {
 public:
  struct Counts {
    double residing = 0.0;
    double daytime = 0.0;
  };

  void add(const std::string& unit, int32_t month, Counts counts);
  const Counts* find(std::string_view unit, int32_t month) const;
  bool empty() const { return by_unit_.empty(); }
  size_t entry_count() const;
  bool any_month_in(const MonthRange& window) const;
  // Mean monthly devices for a unit over `window`: absent months count as
  // zero, the divisor is the window length.
  Counts mean_over(std::string_view unit, const MonthRange& window) const;

  const std::map<std::string, std::map<int32_t, Counts>>& by_unit() const { return by_unit_; }

 private:
  std::map<std::string, std::map<int32_t, Counts>> by_unit_;
};

// Panel input: CSV census_block_group,month,number_devices_residing,
// number_devices_primary_daytime. Duplicate (unit,month) keys and negative
// counts are fatal.
DevicePanel load_device_panel(const std::string& path);

void write_flow_table_csv(const std::string& path, const FlowTable& table,
                          const ZoneRegistry& registry);
void write_flow_table_by_day_csv(const std::string& path, const FlowTable& table,
                                 const ZoneRegistry& registry);
FlowTable load_flow_table_csv(const std::string& path, const ZoneRegistry& registry,
                              const std::string& dataset_id);

}  // namespace odcmp
