#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace odcmp {

// Reads a text file (plain or gzip, detected by magic bytes) in blocks that
// end on line boundaries. Peak memory is one block plus the carried partial
// line, independent of file size.
class LineReader {
 public:
  explicit LineReader(const std::string& path);
  ~LineReader();

  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  // Fills `block` with complete lines (trailing '\n' kept, except possibly on
  // the final line of the file). Returns false when the file is exhausted.
  bool next_block(std::string& block, size_t target_bytes = 8 << 20);

 private:
  size_t read_raw(char* dst, size_t n);

  std::string path_;
  std::FILE* file_ = nullptr;
  void* gz_ = nullptr;  // gzFile when compressed
  std::string carry_;
  bool eof_ = false;
};

// Splits `block` into at most `n` sub-ranges at line boundaries, for handing
// one slice to each ingestion worker. Slices cover the block exactly.
std::vector<std::string_view> split_block(std::string_view block, int n);

// CSV line -> fields. Unquoted fields are zero-copy views into the line;
// quoted fields (RFC 4180 style, "" escapes) are materialized in `storage`.
struct CsvRow {
  std::vector<std::string_view> fields;
  std::vector<std::string> storage;
};

void parse_csv_line(std::string_view line, CsvRow& row);

// Header-aware reader for the small reference tables (crosswalk, features,
// panel). Not used on the hot ingestion path.
class CsvFile {
 public:
  explicit CsvFile(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  // Index of a header column, or -1 when absent.
  int column(std::string_view name) const;
  int require_column(std::string_view name) const;  // throws DataError missing-column

  // Advances to the next non-empty row; false at EOF.
  bool next(CsvRow& row);
  size_t line_number() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  bool next_line(std::string_view& line);

  std::string path_;
  LineReader reader_;
  std::string block_;
  size_t block_pos_ = 0;
  std::vector<std::string> header_;
  size_t line_no_ = 0;
};

// Writes `content` to `path` atomically enough for our purposes (truncate +
// write + close), creating parent directories first. Throws DataError on
// failure.
void write_file(const std::string& path, std::string_view content);

std::string sha256_file_hex(const std::string& path);
std::string sha256_hex(std::string_view data);

// Shortest round-trip formatting (std::to_chars); all emitted floats go
// through this so staged reruns read back exactly what memory held.
std::string format_double(double v);

// Strict numeric parsing: the whole field must be consumed.
bool parse_double(std::string_view s, double& out);
bool parse_u64(std::string_view s, uint64_t& out);
bool parse_i64(std::string_view s, int64_t& out);

}  // namespace odcmp
