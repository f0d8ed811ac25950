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

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>

#include "qtherm/experiments.hpp"
#include "qtherm/io.hpp"

using namespace qtherm;
using app::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qtherm_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("numbers round-trip through 17 significant digits") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::strtod(io::format_number(x).c_str(), nullptr) == x);
  }
  CHECK(io::format_number(0.1) == "0.10000000000000001");
  CHECK(io::format_number(std::nan("")) == "nan");
  CHECK(io::format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(io::format_number(std::int64_t{-42}) == "-42");
}

TEST_CASE("CSV write and read") {
  io::CsvTable t({"a", "b", "name"});
  t.row().add(1.25).add(std::int64_t{3}).add(std::string("x"));
  t.row().add(-0.5).add(4).add(std::string("y"));
  CHECK(t.str() == "a,b,name\n1.25,3,x\n-0.5,4,y\n");
  CHECK_THROWS_AS(t.row().add(std::string("has,comma")), io::IoError);

  const fs::path dir = scratch("csv");
  io::OutputDir out(dir);
  io::CsvTable u({"a", "b"});
  u.row().add(1.0 / 3.0).add(2.0);
  out.write_csv("u.csv", u);
  REQUIRE(out.files().size() == 1);
  CHECK_FALSE(fs::exists(dir / "u.csv.tmp"));
  const io::CsvData d = io::read_csv(dir / "u.csv");
  CHECK(d.number(0, "a") == 1.0 / 3.0);
  CHECK(d.numbers("b") == std::vector<double>{2.0});
  CHECK_THROWS_AS(d.column("c"), io::IoError);
  fs::remove_all(dir);
}

TEST_CASE("binary dumps round-trip and reject damage") {
  Matrix m(3, 2);
  m << 1, 2, 3, 4, 5, 6.5;
  const std::string bytes = io::encode_matrix(m);
  CHECK(bytes.size() == 32 + 6 * 8);
  CHECK(io::decode_matrix(bytes) == m);
  CHECK_THROWS_AS(io::decode_matrix(bytes.substr(0, bytes.size() - 1)), io::IoError);
  CHECK_THROWS_AS(io::decode_spectrum(bytes), io::IoError);  // wrong payload kind
  std::string bad = bytes;
  bad[8] = 9;  // version
  CHECK_THROWS_AS(io::decode_matrix(bad), io::IoError);

  const Vector e = (Vector(2) << -1.0, 2.0).finished();
  const Matrix v = Matrix::Identity(2, 2);
  const auto [e2, v2] = io::decode_spectrum(io::encode_spectrum(e, v));
  CHECK(e2 == e);
  CHECK(v2 == v);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::hex64(0xabcULL) == "0000000000000abc");
}

}

TEST_SUITE("config") {

using app::parse_config;

TEST_CASE("a minimal config takes the defaults") {
  const auto cfg = parse_config(json::parse(R"({"experiment": "ou"})"));
  CHECK(cfg.kind == app::ExperimentKind::kOu);
  CHECK(cfg.ou.n_paths == 10000);
  CHECK(cfg.seed == 1);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "ou", "sead": 3})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "ou", "ou": {"kk": 1}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(
                      R"({"experiment": "evolve", "model": {"kind": "oscillator", "spin": 3}})")),
                  ConfigError);
  // A section for a different experiment is an unknown key too.
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "ou", "einstein": {}})")), ConfigError);
}

TEST_CASE("type and range errors are config errors") {
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "ou", "seed": "x"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "ou", "threads": 0})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "warp"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"seed": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"([1, 2])")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(
                      R"({"experiment": "trajectories", "model": {"kind": "oscillator"},
                          "observable": "position_site_1", "trajectories": {"dt_list": []}})")),
                  ConfigError);
}

TEST_CASE("load_config reports unreadable and malformed files") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  CHECK_THROWS_AS(app::load_config(dir / "absent.json"), ConfigError);
  std::ofstream(dir / "bad.json") << "{\"experiment\": ";
  CHECK_THROWS_AS(app::load_config(dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("config hash ignores key order and whitespace") {
  const auto a = json::parse(R"({"experiment": "ou", "seed": 3})");
  const auto b = json::parse(R"({ "seed":3,"experiment":"ou" })");
  CHECK(app::config_hash(a) == app::config_hash(b));
  CHECK(app::config_hash(a) != app::config_hash(json::parse(R"({"experiment": "ou", "seed": 4})")));
}

TEST_CASE("output directory precedence") {
  auto cfg = parse_config(json::parse(R"({"experiment": "ou"})"));
  const fs::path config_path = "/x/y/run1.json";
  CHECK(app::resolve_output_dir(cfg, config_path, fs::path("/flag")) == fs::path("/flag"));
  ::setenv("QTHERM_OUTPUT_ROOT", "/root_env", 1);
  CHECK(app::resolve_output_dir(cfg, config_path, std::nullopt) == fs::path("/root_env/run1"));
  cfg.output = "/from_cfg";
  CHECK(app::resolve_output_dir(cfg, config_path, std::nullopt) == fs::path("/from_cfg"));
  ::unsetenv("QTHERM_OUTPUT_ROOT");
}

}
