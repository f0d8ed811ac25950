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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <utility>
#include <string>
#include <vector>

#include "qtherm/common.hpp"

namespace qtherm::io {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest form that round-trips is not required; 17 significant digits are.
std::string format_number(double v);
std::string format_number(std::int64_t v);

/// Header-first CSV table, one column per name, cells already formatted.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  CsvTable& row();  // starts a new row
  CsvTable& add(double v);
  CsvTable& add(std::int64_t v);
  CsvTable& add(int v) { return add(static_cast<std::int64_t>(v)); }
  CsvTable& add(const std::string& text);

  const std::vector<std::string>& columns() const { return columns_; }
  size_t n_rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parsed CSV with numeric access by column name.
struct CsvData {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  size_t column(const std::string& name) const;  // throws IoError if absent
  bool has(const std::string& name) const;
  double number(size_t row, const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};

CsvData read_csv(const fs::path& path);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);
std::string read_file(const fs::path& path);

/// Owns an output directory and records every file written into it.
class OutputDir {
 public:
  explicit OutputDir(fs::path root);

  const fs::path& root() const { return root_; }
  // Writes atomically (temp file + rename) and registers the file.
  void write(const std::string& name, const std::string& contents);
  void write_csv(const std::string& name, const CsvTable& table);
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

// Binary dumps: 8-byte magic "QTHERMBN", uint32 format version, uint32 payload
// kind (1 matrix, 2 spectrum), uint64 rows, uint64 cols, then little-endian
// doubles. A spectrum stores the energies first, then the eigenvector matrix;
// matrices are column-major.
inline constexpr std::uint32_t kBinaryVersion = 1;
std::string encode_matrix(const Matrix& m);
std::string encode_spectrum(const Vector& energies, const Matrix& vectors);
Matrix decode_matrix(const std::string& bytes);
std::pair<Vector, Matrix> decode_spectrum(const std::string& bytes);

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kFailedMarker = "FAILED";

}  // namespace qtherm::io
