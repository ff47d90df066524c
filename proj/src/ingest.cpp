#include "odcmp/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "odcmp/error.hpp"
#include "odcmp/io.hpp"

namespace odcmp {

namespace {

int default_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Dense per-worker accumulator for small zone systems, hash map otherwise.
// Either way the memory bound is O(min(zones^2, distinct pairs)).
constexpr uint32_t kDenseZoneLimit = 1024;

struct Accumulator {
  uint32_t n_zones = 0;
  bool dense = false;
  std::vector<uint64_t> grid;
  std::unordered_map<uint64_t, uint64_t> map;
  RejectLog rejects;
  bool per_day = false;
  std::map<int32_t, std::unordered_map<uint64_t, uint64_t>> by_day;

  void init(uint32_t zones, bool keep_days) {
    n_zones = zones;
    per_day = keep_days;
    dense = zones <= kDenseZoneLimit;
    if (dense) grid.assign((size_t)zones * zones, 0);
  }

  void add(uint32_t o, uint32_t d, uint64_t c, int32_t day) {
    if (dense) {
      grid[(size_t)o * n_zones + d] += c;
    } else {
      map[FlowTable::pack(o, d)] += c;
    }
    if (per_day) by_day[day][FlowTable::pack(o, d)] += c;
    rejects.accepted += 1;
  }

  void drain_into(FlowTable& table) const {
    if (dense) {
      for (uint32_t o = 0; o < n_zones; ++o) {
        for (uint32_t d = 0; d < n_zones; ++d) {
          uint64_t c = grid[(size_t)o * n_zones + d];
          if (c) table.add(o, d, c);
        }
      }
    } else {
      for (const auto& [key, c] : map) table.add((uint32_t)(key >> 32), (uint32_t)key, c);
    }
    for (const auto& [day, cells] : by_day) {
      for (const auto& [key, c] : cells) {
        table.add_by_day(day, (uint32_t)(key >> 32), (uint32_t)key, c);
      }
    }
    table.rejects().merge(rejects);
  }
};

bool try_parse_date_prefix(std::string_view s, int32_t& day_out) {
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return false;
  if (s.size() > 10 && s[10] != ' ' && s[10] != 'T') return false;
  int y = 0, m = 0, d = 0;
  for (int i = 0; i < 4; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    y = y * 10 + (c - '0');
  }
  for (int i = 5; i < 7; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    m = m * 10 + (c - '0');
  }
  for (int i = 8; i < 10; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    d = d * 10 + (c - '0');
  }
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{(unsigned)m}, std::chrono::day{(unsigned)d}};
  if (!ymd.ok()) return false;
  day_out = (int32_t)sys_days(ymd).time_since_epoch().count();
  return true;
}

std::string_view sample_of(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  return line.substr(0, 160);
}

// Splits an unquoted CSV line, keeping only field indices < max_fields.
// Returns false (caller falls back to the quoted parser) when '"' appears.
bool fast_split(std::string_view line, std::vector<std::string_view>& out, size_t max_fields) {
  out.clear();
  if (line.find('"') != std::string_view::npos) return false;
  size_t pos = 0;
  while (out.size() < max_fields) {
    size_t end = line.find(',', pos);
    if (end == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return true;
    }
    out.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  return true;
}

struct TaxiContext {
  const ZoneRegistry* registry;
  const IngestOptions* options;
  int c_datetime = -1;
  int c_pu = -1;
  int c_do = -1;
  int c_pax = -1;
  size_t max_field = 0;
};

void parse_taxi_lines(std::string_view slice, const TaxiContext& ctx, Accumulator& acc) {
  const ZoneRegistry& reg = *ctx.registry;
  const IngestOptions& opt = *ctx.options;
  std::vector<std::string_view> fields;
  fields.reserve(ctx.max_field + 1);
  CsvRow slow_row;

  size_t pos = 0;
  while (pos < slice.size()) {
    size_t end = slice.find('\n', pos);
    if (end == std::string_view::npos) end = slice.size();
    std::string_view line = slice.substr(pos, end - pos);
    pos = end + 1;
    while (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const std::string_view* f = nullptr;
    size_t nf = 0;
    if (fast_split(line, fields, ctx.max_field + 1)) {
      f = fields.data();
      nf = fields.size();
    } else {
      parse_csv_line(line, slow_row);
      f = slow_row.fields.data();
      nf = slow_row.fields.size();
    }
    if (nf <= ctx.max_field) {
      acc.rejects.reject("malformed-row", sample_of(line));
      continue;
    }

    int32_t day;
    if (!try_parse_date_prefix(f[ctx.c_datetime], day)) {
      acc.rejects.reject("bad-date", sample_of(line));
      continue;
    }
    if (!opt.window.contains(day)) {
      acc.rejects.reject("out-of-window", sample_of(line));
      continue;
    }
    auto o = reg.find_zone(f[ctx.c_pu]);
    if (!o) {
      acc.rejects.reject("unknown-origin-zone", sample_of(line));
      continue;
    }
    auto d = reg.find_zone(f[ctx.c_do]);
    if (!d) {
      acc.rejects.reject("unknown-dest-zone", sample_of(line));
      continue;
    }
    uint64_t count = 1;
    if (opt.passenger_weighted) {
      double pax;
      if (!parse_double(f[ctx.c_pax], pax) || pax < 0.0 || pax > 1e6) {
        acc.rejects.reject("malformed-row", sample_of(line));
        continue;
      }
      count = (uint64_t)std::llround(pax);
      if (count == 0) {
        acc.rejects.reject("zero-count", sample_of(line));
        continue;
      }
    }
    acc.add(*o, *d, count, day);
  }
}

void check_reject_threshold(const FlowTable& table, const IngestOptions& options,
                            const std::string& path) {
  const RejectLog& log = table.rejects();
  uint64_t considered = log.accepted + log.rejected;
  if (considered == 0) return;
  double frac = (double)log.threshold_relevant() / (double)considered;
  if (frac > options.reject_threshold) {
    std::ostringstream msg;
    msg << path << ": " << log.threshold_relevant() << " of " << considered
        << " records rejected (" << format_double(frac * 100.0)
        << "% > " << format_double(options.reject_threshold * 100.0) << "% threshold)";
    for (const auto& [reason, count] : log.reasons) msg << "; " << reason << "=" << count;
    if (!log.samples.empty()) msg << "; e.g. '" << log.samples.front() << "'";
    throw DataError("reject-threshold-exceeded", msg.str());
  }
}

}  // namespace

void RejectLog::reject(std::string_view reason, std::string_view context) {
  rejected += 1;
  reasons[std::string(reason)] += 1;
  if (samples.size() < kMaxSamples && !context.empty()) {
    samples.emplace_back(std::string(reason) + ": " + std::string(context));
  }
}

void RejectLog::merge(const RejectLog& other) {
  accepted += other.accepted;
  rejected += other.rejected;
  for (const auto& [reason, count] : other.reasons) reasons[reason] += count;
  for (const auto& s : other.samples) {
    if (samples.size() >= kMaxSamples) break;
    samples.push_back(s);
  }
}

uint64_t RejectLog::reason_count(std::string_view reason) const {
  auto it = reasons.find(std::string(reason));
  return it == reasons.end() ? 0 : it->second;
}

bool RejectLog::counts_toward_threshold(std::string_view reason) {
  return reason != "out-of-window" && reason != "self-excluded";
}

uint64_t RejectLog::threshold_relevant() const {
  uint64_t n = 0;
  for (const auto& [reason, count] : reasons) {
    if (counts_toward_threshold(reason)) n += count;
  }
  return n;
}

void FlowTable::add(uint32_t origin, uint32_t dest, uint64_t count) {
  if (count == 0) return;
  cells_[pack(origin, dest)] += count;
  total_ += count;
}

void FlowTable::add_by_day(int32_t day, uint32_t origin, uint32_t dest, uint64_t count) {
  if (count == 0) return;
  by_day_[day][pack(origin, dest)] += count;
}

uint64_t FlowTable::cell(uint32_t origin, uint32_t dest) const {
  auto it = cells_.find(pack(origin, dest));
  return it == cells_.end() ? 0 : it->second;
}

std::vector<FlowCell> FlowTable::sorted_cells() const {
  std::vector<FlowCell> out;
  out.reserve(cells_.size());
  for (const auto& [key, count] : cells_) {
    out.push_back(FlowCell{(uint32_t)(key >> 32), (uint32_t)key, count});
  }
  std::sort(out.begin(), out.end(), [](const FlowCell& a, const FlowCell& b) {
    return a.origin != b.origin ? a.origin < b.origin : a.dest < b.dest;
  });
  return out;
}

bool operator==(const FlowTable& a, const FlowTable& b) {
  if (a.dataset_id_ != b.dataset_id_ || a.n_zones_ != b.n_zones_ || a.total_ != b.total_) {
    return false;
  }
  if (a.rejects_.accepted != b.rejects_.accepted || a.rejects_.rejected != b.rejects_.rejected ||
      a.rejects_.reasons != b.rejects_.reasons) {
    return false;
  }
  if (a.sorted_cells() != b.sorted_cells()) return false;
  if (a.by_day_.size() != b.by_day_.size()) return false;
  for (auto ita = a.by_day_.begin(), itb = b.by_day_.begin(); ita != a.by_day_.end();
       ++ita, ++itb) {
    if (ita->first != itb->first || ita->second != itb->second) return false;
  }
  return true;
}

FlowTable merge_flow_tables(const FlowTable& a, const FlowTable& b) {
  if (a.dataset_id() != b.dataset_id() || a.n_zones() != b.n_zones()) {
    throw DataError("dataset-id-mismatch", "cannot merge '" + a.dataset_id() + "'/" +
                                               std::to_string(a.n_zones()) + " with '" +
                                               b.dataset_id() + "'/" + std::to_string(b.n_zones()));
  }
  FlowTable out(a.dataset_id(), a.n_zones());
  for (const auto& t : {&a, &b}) {
    for (const auto& [key, count] : t->cells()) {
      out.add((uint32_t)(key >> 32), (uint32_t)key, count);
    }
    for (const auto& [day, cells] : t->by_day()) {
      for (const auto& [key, count] : cells) {
        out.add_by_day(day, (uint32_t)(key >> 32), (uint32_t)key, count);
      }
    }
  }
  out.rejects().merge(a.rejects());
  out.rejects().merge(b.rejects());
  return out;
}

FlowTable ingest_od_trips(const std::string& path, const ZoneRegistry& registry,
                          const IngestOptions& options, const std::string& dataset_id) {
  LineReader reader(path);
  std::string block;
  if (!reader.next_block(block)) throw DataError("empty-file", "'" + path + "' has no header");

  TaxiContext ctx;
  ctx.registry = &registry;
  ctx.options = &options;
  size_t header_end = block.find('\n');
  if (header_end == std::string::npos) header_end = block.size();
  {
    CsvRow header;
    parse_csv_line(std::string_view(block).substr(0, header_end), header);
    auto find = [&](const std::string& name) {
      for (size_t i = 0; i < header.fields.size(); ++i) {
        if (header.fields[i] == name) return (int)i;
      }
      return -1;
    };
    const TaxiColumns& cols = options.taxi_columns;
    ctx.c_datetime = find(cols.pickup_datetime);
    ctx.c_pu = find(cols.pickup_zone);
    ctx.c_do = find(cols.dropoff_zone);
    if (ctx.c_datetime < 0 || ctx.c_pu < 0 || ctx.c_do < 0) {
      throw DataError("missing-column", path + ": need columns '" + cols.pickup_datetime + "', '" +
                                            cols.pickup_zone + "', '" + cols.dropoff_zone + "'");
    }
    ctx.max_field = (size_t)std::max({ctx.c_datetime, ctx.c_pu, ctx.c_do});
    if (options.passenger_weighted) {
      ctx.c_pax = find(cols.passenger_count);
      if (ctx.c_pax < 0) {
        throw DataError("missing-column", path + ": passenger weighting needs column '" +
                                              cols.passenger_count + "'");
      }
      ctx.max_field = std::max(ctx.max_field, (size_t)ctx.c_pax);
    }
  }

  const int nw = options.workers > 0 ? options.workers : default_workers();
  std::vector<Accumulator> accs(nw);
  for (auto& acc : accs) acc.init((uint32_t)registry.zone_count(), options.per_day);

  bool first_block = true;
  do {
    std::string_view content = block;
    if (first_block) {
      content.remove_prefix(std::min(header_end + 1, content.size()));
      first_block = false;
    }
    if (content.empty()) continue;
    auto slices = split_block(content, nw);
    const int ns = (int)slices.size();
#ifdef _OPENMP
#pragma omp parallel for num_threads(nw) schedule(static, 1)
#endif
    for (int i = 0; i < ns; ++i) parse_taxi_lines(slices[i], ctx, accs[i]);
  } while (reader.next_block(block));

  FlowTable table(dataset_id, (uint32_t)registry.zone_count());
  for (const auto& acc : accs) acc.drain_into(table);
  check_reject_threshold(table, options, path);
  return table;
}

FlowTable ingest_od_trips_serial(const std::string& path, const ZoneRegistry& registry,
                                 const IngestOptions& options, const std::string& dataset_id) {
  CsvFile file(path);
  const TaxiColumns& cols = options.taxi_columns;
  int c_datetime = file.require_column(cols.pickup_datetime);
  int c_pu = file.require_column(cols.pickup_zone);
  int c_do = file.require_column(cols.dropoff_zone);
  int c_pax = options.passenger_weighted ? file.require_column(cols.passenger_count) : -1;
  size_t max_field = (size_t)std::max({c_datetime, c_pu, c_do, c_pax});

  FlowTable table(dataset_id, (uint32_t)registry.zone_count());
  RejectLog& log = table.rejects();
  CsvRow row;
  while (file.next(row)) {
    if (row.fields.size() <= max_field) {
      log.reject("malformed-row", "");
      continue;
    }
    int32_t day;
    if (!try_parse_date_prefix(row.fields[c_datetime], day)) {
      log.reject("bad-date", "");
      continue;
    }
    if (!options.window.contains(day)) {
      log.reject("out-of-window", "");
      continue;
    }
    auto o = registry.find_zone(row.fields[c_pu]);
    auto d = registry.find_zone(row.fields[c_do]);
    if (!o) {
      log.reject("unknown-origin-zone", "");
      continue;
    }
    if (!d) {
      log.reject("unknown-dest-zone", "");
      continue;
    }
    uint64_t count = 1;
    if (options.passenger_weighted) {
      double pax;
      if (!parse_double(row.fields[c_pax], pax) || pax < 0.0 || pax > 1e6) {
        log.reject("malformed-row", "");
        continue;
      }
      count = (uint64_t)std::llround(pax);
      if (count == 0) {
        log.reject("zero-count", "");
        continue;
      }
    }
    table.add(*o, *d, count);
    if (options.per_day) table.add_by_day(day, *o, *d, count);
    log.accepted += 1;
  }
  check_reject_threshold(table, options, path);
  return table;
}

namespace {

struct DeviceContext {
  const ZoneRegistry* registry;
  const IngestOptions* options;
  int c_date = -1;
  int c_origin = -1;
  int c_dests = -1;
  size_t max_field = 0;
};

void parse_device_lines(std::string_view slice, const DeviceContext& ctx, Accumulator& acc) {
  const ZoneRegistry& reg = *ctx.registry;
  const IngestOptions& opt = *ctx.options;
  CsvRow row;

  size_t pos = 0;
  while (pos < slice.size()) {
    size_t end = slice.find('\n', pos);
    if (end == std::string_view::npos) end = slice.size();
    std::string_view line = slice.substr(pos, end - pos);
    pos = end + 1;
    while (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    parse_csv_line(line, row);
    if (row.fields.size() <= ctx.max_field) {
      acc.rejects.reject("malformed-row", sample_of(line));
      continue;
    }
    int32_t day;
    if (!try_parse_date_prefix(row.fields[ctx.c_date], day)) {
      acc.rejects.reject("bad-date", sample_of(line));
      continue;
    }
    bool in_window = opt.window.contains(day);

    std::string_view origin_unit = row.fields[ctx.c_origin];
    bool origin_known = reg.has_unit(origin_unit);
    uint32_t origin_zone = origin_known ? reg.primary_zone(origin_unit) : 0;

    nlohmann::json dests = nlohmann::json::parse(row.fields[ctx.c_dests], nullptr, false);
    if (dests.is_discarded() || !dests.is_object()) {
      // entry count unknowable for an unparseable map: account one record
      acc.rejects.reject("bad-destination-map", sample_of(line));
      continue;
    }
    for (const auto& [dest_unit, value] : dests.items()) {
      if (!in_window) {
        acc.rejects.reject("out-of-window", "");
        continue;
      }
      if (!origin_known) {
        acc.rejects.reject("unknown-origin-unit", sample_of(origin_unit));
        continue;
      }
      if (!value.is_number_integer()) {
        acc.rejects.reject("bad-destination-entry", sample_of(dest_unit));
        continue;
      }
      int64_t count = value.get<int64_t>();
      if (count < 0) {
        acc.rejects.reject("negative-count", sample_of(dest_unit));
        continue;
      }
      if (count == 0) {
        acc.rejects.reject("zero-count", "");
        continue;
      }
      if (!reg.has_unit(dest_unit)) {
        acc.rejects.reject("unknown-dest-unit", sample_of(dest_unit));
        continue;
      }
      if (!opt.include_self && dest_unit == origin_unit) {
        acc.rejects.reject("self-excluded", "");
        continue;
      }
      FlowRecord rec{origin_zone, reg.primary_zone(dest_unit), (uint64_t)count, day};
      acc.add(rec.origin_zone, rec.dest_zone, rec.count, rec.day);
    }
  }
}

}  // namespace

FlowTable ingest_unit_flows(const std::string& path, const ZoneRegistry& registry,
                            const IngestOptions& options, const std::string& dataset_id) {
  LineReader reader(path);
  std::string block;
  if (!reader.next_block(block)) throw DataError("empty-file", "'" + path + "' has no header");

  DeviceContext ctx;
  ctx.registry = &registry;
  ctx.options = &options;
  size_t header_end = block.find('\n');
  if (header_end == std::string::npos) header_end = block.size();
  {
    CsvRow header;
    parse_csv_line(std::string_view(block).substr(0, header_end), header);
    auto find = [&](std::string_view name) {
      for (size_t i = 0; i < header.fields.size(); ++i) {
        if (header.fields[i] == name) return (int)i;
      }
      return -1;
    };
    ctx.c_date = find("date");
    ctx.c_origin = find("origin_census_block_group");
    ctx.c_dests = find("destination_cbgs");
    if (ctx.c_date < 0 || ctx.c_origin < 0 || ctx.c_dests < 0) {
      throw DataError("missing-column",
                      path + ": need columns 'date', 'origin_census_block_group', 'destination_cbgs'");
    }
    ctx.max_field = (size_t)std::max({ctx.c_date, ctx.c_origin, ctx.c_dests});
  }

  const int nw = options.workers > 0 ? options.workers : default_workers();
  std::vector<Accumulator> accs(nw);
  for (auto& acc : accs) acc.init((uint32_t)registry.zone_count(), options.per_day);

  bool first_block = true;
  do {
    std::string_view content = block;
    if (first_block) {
      content.remove_prefix(std::min(header_end + 1, content.size()));
      first_block = false;
    }
    if (content.empty()) continue;
    auto slices = split_block(content, nw);
    const int ns = (int)slices.size();
#ifdef _OPENMP
#pragma omp parallel for num_threads(nw) schedule(static, 1)
#endif
    for (int i = 0; i < ns; ++i) parse_device_lines(slices[i], ctx, accs[i]);
  } while (reader.next_block(block));

  FlowTable table(dataset_id, (uint32_t)registry.zone_count());
  for (const auto& acc : accs) acc.drain_into(table);
  check_reject_threshold(table, options, path);
  return table;
}

void DevicePanel::add(const std::string& unit, int32_t month, Counts counts) {
  auto [it, inserted] = by_unit_[unit].emplace(month, counts);
  if (!inserted) {
    throw DataError("duplicate-row",
                    "panel entry (" + unit + ", " + format_month(month) + ") appears twice");
  }
}

const DevicePanel::Counts* DevicePanel::find(std::string_view unit, int32_t month) const {
  auto it = by_unit_.find(std::string(unit));
  if (it == by_unit_.end()) return nullptr;
  auto jt = it->second.find(month);
  return jt == it->second.end() ? nullptr : &jt->second;
}

size_t DevicePanel::entry_count() const {
  size_t n = 0;
  for (const auto& [unit, months] : by_unit_) n += months.size();
  return n;
}

bool DevicePanel::any_month_in(const MonthRange& window) const {
  for (const auto& [unit, months] : by_unit_) {
    auto it = months.lower_bound(window.start);
    if (it != months.end() && it->first <= window.end) return true;
  }
  return false;
}

DevicePanel::Counts DevicePanel::mean_over(std::string_view unit, const MonthRange& window) const {
  Counts sum;
  auto it = by_unit_.find(std::string(unit));
  if (it != by_unit_.end()) {
    for (auto jt = it->second.lower_bound(window.start);
         jt != it->second.end() && jt->first <= window.end; ++jt) {
      sum.residing += jt->second.residing;
      sum.daytime += jt->second.daytime;
    }
  }
  sum.residing /= window.size();
  sum.daytime /= window.size();
  return sum;
}

DevicePanel load_device_panel(const std::string& path) {
  CsvFile file(path);
  int c_unit = file.require_column("census_block_group");
  int c_month = file.require_column("month");
  int c_res = file.require_column("number_devices_residing");
  int c_day = file.require_column("number_devices_primary_daytime");

  DevicePanel panel;
  CsvRow row;
  while (file.next(row)) {
    size_t max_field = (size_t)std::max({c_unit, c_month, c_res, c_day});
    if (row.fields.size() <= max_field) {
      throw DataError("malformed-row", path + ":" + std::to_string(file.line_number()));
    }
    DevicePanel::Counts counts;
    if (!parse_double(row.fields[c_res], counts.residing) ||
        !parse_double(row.fields[c_day], counts.daytime)) {
      throw DataError("malformed-row",
                      path + ":" + std::to_string(file.line_number()) + ": bad device count");
    }
    if (counts.residing < 0.0 || counts.daytime < 0.0) {
      throw DataError("negative-count", path + ":" + std::to_string(file.line_number()));
    }
    panel.add(std::string(row.fields[c_unit]), parse_month(row.fields[c_month]), counts);
  }
  return panel;
}

void write_flow_table_csv(const std::string& path, const FlowTable& table,
                          const ZoneRegistry& registry) {
  std::ostringstream out;
  out << "origin_zone,dest_zone,count\n";
  for (const auto& cell : table.sorted_cells()) {
    out << registry.zone_id(cell.origin) << ',' << registry.zone_id(cell.dest) << ',' << cell.count
        << '\n';
  }
  write_file(path, out.str());
}

void write_flow_table_by_day_csv(const std::string& path, const FlowTable& table,
                                 const ZoneRegistry& registry) {
  std::ostringstream out;
  out << "day,origin_zone,dest_zone,count\n";
  for (const auto& [day, cells] : table.by_day()) {
    std::vector<std::pair<uint64_t, uint64_t>> sorted(cells.begin(), cells.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [key, count] : sorted) {
      out << format_date(day) << ',' << registry.zone_id((uint32_t)(key >> 32)) << ','
          << registry.zone_id((uint32_t)key) << ',' << count << '\n';
    }
  }
  write_file(path, out.str());
}

FlowTable load_flow_table_csv(const std::string& path, const ZoneRegistry& registry,
                              const std::string& dataset_id) {
  CsvFile file(path);
  int c_o = file.require_column("origin_zone");
  int c_d = file.require_column("dest_zone");
  int c_n = file.require_column("count");
  FlowTable table(dataset_id, (uint32_t)registry.zone_count());
  CsvRow row;
  while (file.next(row)) {
    auto o = registry.find_zone(row.fields.at(c_o));
    auto d = registry.find_zone(row.fields.at(c_d));
    uint64_t count;
    if (!o || !d) {
      throw DataError("unknown-zone", path + ":" + std::to_string(file.line_number()));
    }
    if (!parse_u64(row.fields.at(c_n), count)) {
      throw DataError("malformed-row", path + ":" + std::to_string(file.line_number()));
    }
    table.add(*o, *d, count);
    table.rejects().accepted += 1;
  }
  return table;
}

}  // namespace odcmp
