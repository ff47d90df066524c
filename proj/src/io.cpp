#include "odcmp/io.hpp"

#include <zlib.h>

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "odcmp/error.hpp"

namespace odcmp {

LineReader::LineReader(const std::string& path) : path_(path) {
  std::FILE* probe = std::fopen(path.c_str(), "rb");
  if (!probe) throw DataError("unreadable-file", "cannot open '" + path + "'");
  unsigned char magic[2] = {0, 0};
  size_t got = std::fread(magic, 1, 2, probe);
  std::fclose(probe);
  if (got == 2 && magic[0] == 0x1f && magic[1] == 0x8b) {
    gz_ = gzopen(path.c_str(), "rb");
    if (!gz_) throw DataError("unreadable-file", "cannot open gzip '" + path + "'");
    gzbuffer((gzFile)gz_, 1 << 20);
  } else {
    file_ = std::fopen(path.c_str(), "rb");
    if (!file_) throw DataError("unreadable-file", "cannot open '" + path + "'");
  }
}

LineReader::~LineReader() {
  if (file_) std::fclose(file_);
  if (gz_) gzclose((gzFile)gz_);
}

size_t LineReader::read_raw(char* dst, size_t n) {
  if (file_) return std::fread(dst, 1, n, file_);
  int got = gzread((gzFile)gz_, dst, (unsigned)n);
  if (got < 0) throw DataError("unreadable-file", "gzip read error in '" + path_ + "'");
  return (size_t)got;
}

bool LineReader::next_block(std::string& block, size_t target_bytes) {
  block.clear();
  if (eof_ && carry_.empty()) return false;
  block.swap(carry_);
  while (!eof_ && block.size() < target_bytes) {
    size_t old = block.size();
    block.resize(old + (target_bytes - old));
    size_t got = read_raw(block.data() + old, block.size() - old);
    block.resize(old + got);
    if (got == 0) eof_ = true;
  }
  if (!eof_) {
    // push the trailing partial line into carry_
    size_t cut = block.rfind('\n');
    if (cut == std::string::npos) {
      // single line longer than the block: extend until we find a newline
      std::string extra(4096, '\0');
      for (;;) {
        size_t got = read_raw(extra.data(), extra.size());
        if (got == 0) {
          eof_ = true;
          break;
        }
        block.append(extra.data(), got);
        size_t nl = block.rfind('\n');
        if (nl != std::string::npos) {
          carry_.assign(block, nl + 1, block.size() - nl - 1);
          block.resize(nl + 1);
          break;
        }
      }
    } else {
      carry_.assign(block, cut + 1, block.size() - cut - 1);
      block.resize(cut + 1);
    }
  }
  return !block.empty();
}

std::vector<std::string_view> split_block(std::string_view block, int n) {
  std::vector<std::string_view> slices;
  if (n < 1) n = 1;
  size_t begin = 0;
  for (int i = 1; i < n && begin < block.size(); ++i) {
    size_t target = block.size() * (size_t)i / (size_t)n;
    if (target <= begin) continue;
    size_t cut = block.find('\n', target);
    if (cut == std::string_view::npos) break;
    slices.push_back(block.substr(begin, cut + 1 - begin));
    begin = cut + 1;
  }
  if (begin < block.size()) slices.push_back(block.substr(begin));
  return slices;
}

void parse_csv_line(std::string_view line, CsvRow& row) {
  row.fields.clear();
  row.storage.clear();
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  size_t pos = 0;
  const size_t n = line.size();
  for (;;) {
    if (pos < n && line[pos] == '"') {
      // quoted field
      row.storage.emplace_back();
      std::string& out = row.storage.back();
      ++pos;
      while (pos < n) {
        char c = line[pos];
        if (c == '"') {
          if (pos + 1 < n && line[pos + 1] == '"') {
            out.push_back('"');
            pos += 2;
          } else {
            ++pos;
            break;
          }
        } else {
          out.push_back(c);
          ++pos;
        }
      }
      row.fields.emplace_back(out);
    } else {
      size_t end = line.find(',', pos);
      if (end == std::string_view::npos) end = n;
      row.fields.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    if (pos >= n) break;
    if (line[pos] == ',') ++pos;
    if (pos == n) {  // trailing comma: final empty field
      row.fields.push_back(line.substr(pos, 0));
      break;
    }
  }
}

CsvFile::CsvFile(const std::string& path) : path_(path), reader_(path) {
  std::string_view line;
  if (!next_line(line)) throw DataError("empty-file", "no header in '" + path + "'");
  CsvRow row;
  parse_csv_line(line, row);
  for (auto f : row.fields) header_.emplace_back(f);
}

int CsvFile::column(std::string_view name) const {
  for (size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return (int)i;
  }
  return -1;
}

int CsvFile::require_column(std::string_view name) const {
  int c = column(name);
  if (c < 0) {
    throw DataError("missing-column", "'" + std::string(name) + "' not in header of " + path_);
  }
  return c;
}

bool CsvFile::next_line(std::string_view& line) {
  for (;;) {
    if (block_pos_ >= block_.size()) {
      if (!reader_.next_block(block_)) return false;
      block_pos_ = 0;
    }
    size_t end = block_.find('\n', block_pos_);
    if (end == std::string::npos) end = block_.size();
    line = std::string_view(block_).substr(block_pos_, end - block_pos_);
    block_pos_ = end + 1;
    ++line_no_;
    while (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) return true;
  }
}

bool CsvFile::next(CsvRow& row) {
  std::string_view line;
  if (!next_line(line)) return false;
  parse_csv_line(line, row);
  return true;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool parse_u64(std::string_view s, uint64_t& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool parse_i64(std::string_view s, int64_t& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

void write_file(const std::string& path, std::string_view content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("unwritable-path", "cannot write '" + path + "'");
  out.write(content.data(), (std::streamsize)content.size());
  if (!out) throw DataError("unwritable-path", "short write to '" + path + "'");
}

}  // namespace odcmp
