// Copyright 2026 The qtherm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qtherm/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace qtherm::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_number(std::int64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

CsvTable& CsvTable::row() {
  if (!rows_.empty() && rows_.back().size() != columns_.size()) {
    throw IoError("csv row has " + std::to_string(rows_.back().size()) + " cells, expected " +
                  std::to_string(columns_.size()));
  }
  rows_.emplace_back();
  rows_.back().reserve(columns_.size());
  return *this;
}

CsvTable& CsvTable::add(double v) { return add(format_number(v)); }
CsvTable& CsvTable::add(std::int64_t v) { return add(format_number(v)); }

CsvTable& CsvTable::add(const std::string& text) {
  if (rows_.empty()) throw IoError("csv cell added before row()");
  if (text.find_first_of(",\n\"") != std::string::npos) throw IoError("csv cell needs quoting: " + text);
  rows_.back().push_back(text);
  return *this;
}

std::string CsvTable::str() const {
  std::string out;
  for (size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
  out += '\n';
  for (const auto& r : rows_) {
    if (r.size() != columns_.size()) throw IoError("incomplete csv row");
    for (size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += r[i];
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

size_t CsvData::column(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw IoError("csv column missing: " + name);
}

bool CsvData::has(const std::string& name) const {
  for (const auto& c : columns) {
    if (c == name) return true;
  }
  return false;
}

double CsvData::number(size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(column(name));
  if (cell == "nan") return std::nan("");
  if (cell == "inf") return INFINITY;
  if (cell == "-inf") return -INFINITY;
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw IoError("not a number in column " + name + ": '" + cell + "'");
  }
  return v;
}

std::vector<double> CsvData::numbers(const std::string& name) const {
  std::vector<double> out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = number(i, name);
  return out;
}

CsvData read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvData d;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv: " + path.string());
  d.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != d.columns.size()) {
      throw IoError("ragged csv row in " + path.string());
    }
    d.rows.push_back(std::move(cells));
  }
  return d;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw IoError("cannot create " + root_.string() + ": " + ec.message());
}

void OutputDir::write(const std::string& name, const std::string& contents) {
  const fs::path target = root_ / name;
  const fs::path tmp = root_ / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename to " + target.string() + ": " + ec.message());
  for (const auto& f : files_) {
    if (f == name) return;
  }
  files_.push_back(name);
}

void OutputDir::write_csv(const std::string& name, const CsvTable& table) { write(name, table.str()); }

namespace {

constexpr char kMagic[8] = {'Q', 'T', 'H', 'E', 'R', 'M', 'B', 'N'};
constexpr std::size_t kHeaderBytes = 8 + 4 + 4 + 8 + 8;

template <class T>
void put(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("binary dump truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::string header(std::uint32_t kind, Index rows, Index cols) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kBinaryVersion);
  put<std::uint32_t>(out, kind);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(rows));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(cols));
  return out;
}

void put_doubles(std::string& out, const double* data, Index n) {
  out.append(reinterpret_cast<const char*>(data), static_cast<std::size_t>(n) * sizeof(double));
}

std::pair<Index, Index> read_header(const std::string& in, std::uint32_t kind, std::size_t& pos) {
  if (in.size() < kHeaderBytes || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a qtherm binary dump");
  }
  pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(in, pos);
  if (version != kBinaryVersion) throw IoError("unsupported binary dump version " + std::to_string(version));
  if (get<std::uint32_t>(in, pos) != kind) throw IoError("binary dump holds a different payload kind");
  const auto rows = static_cast<Index>(get<std::uint64_t>(in, pos));
  const auto cols = static_cast<Index>(get<std::uint64_t>(in, pos));
  return {rows, cols};
}

void get_doubles(const std::string& in, std::size_t& pos, double* data, Index n) {
  const std::size_t bytes = static_cast<std::size_t>(n) * sizeof(double);
  if (pos + bytes > in.size()) throw IoError("binary dump truncated");
  std::memcpy(data, in.data() + pos, bytes);
  pos += bytes;
}

}  // namespace

std::string encode_matrix(const Matrix& m) {
  std::string out = header(1, m.rows(), m.cols());
  put_doubles(out, m.data(), m.size());
  return out;
}

std::string encode_spectrum(const Vector& energies, const Matrix& vectors) {
  std::string out = header(2, vectors.rows(), vectors.cols());
  put_doubles(out, energies.data(), energies.size());
  put_doubles(out, vectors.data(), vectors.size());
  return out;
}

Matrix decode_matrix(const std::string& bytes) {
  std::size_t pos = 0;
  const auto [rows, cols] = read_header(bytes, 1, pos);
  Matrix m(rows, cols);
  get_doubles(bytes, pos, m.data(), m.size());
  if (pos != bytes.size()) throw IoError("trailing bytes in binary dump");
  return m;
}

std::pair<Vector, Matrix> decode_spectrum(const std::string& bytes) {
  std::size_t pos = 0;
  const auto [rows, cols] = read_header(bytes, 2, pos);
  Vector e(cols);
  Matrix v(rows, cols);
  get_doubles(bytes, pos, e.data(), e.size());
  get_doubles(bytes, pos, v.data(), v.size());
  if (pos != bytes.size()) throw IoError("trailing bytes in binary dump");
  return {std::move(e), std::move(v)};
}

}  // namespace qtherm::io
