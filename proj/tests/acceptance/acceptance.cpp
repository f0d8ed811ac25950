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

// Runs every shipped config, re-checks the artifacts and prints one line per
// acceptance criterion. Exit status is non-zero when any criterion fails.
#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "qtherm/experiments.hpp"
#include "qtherm/io.hpp"

namespace {

using namespace qtherm;
using namespace qtherm::app;

struct Job {
  std::string config;
  std::vector<int> criteria;  // fed by this run
  bool repeat = false;        // rerun for the determinism check
  int repeat_threads = 1;
};

const std::vector<Job> kJobs = {
    {"oracle", {1, 2, 3}, true, 1},
    {"ou", {11}, true, 2},
    {"ensemble", {10}, true, 2},
    {"oscillator_evolve", {4}, true, 1},
    {"oscillator_trajectories", {4, 5, 6, 9}, false, 1},
    {"blbq_local", {9}, true, 2},
    {"blbq_global", {9}, false, 1},
    {"dos_oscillator", {7}, true, 1},
    {"dos_spin_half", {7}, false, 1},
    {"einstein", {8}, true, 1},
};

const std::map<int, std::string> kTitles = {
    {1, "Chapman-Kolmogorov exactness"},  {2, "kernel semigroup suite"},
    {3, "entropy second law"},            {4, "decay, Gamma ratio, entropy"},
    {5, "consistent histories"},          {6, "Markov kernel validation"},
    {7, "DOS measurement"},               {8, "Einstein relation"},
    {9, "energy drift"},                  {10, "chaotic-ensemble statistics"},
    {11, "OU reference"},                 {12, "determinism"},
};

struct Outcome {
  bool any = false;
  bool pass = true;
  std::string detail;
};

void note(std::map<int, Outcome>& out, int criterion, bool pass, const std::string& detail) {
  auto& o = out[criterion];
  o.any = true;
  o.pass = o.pass && pass;
  o.detail += (o.detail.empty() ? "" : " | ") + detail;
}

std::string csv_mismatch(const fs::path& a, const fs::path& b) {
  const json manifest = json::parse(io::read_file(a / io::kManifestName));
  std::string bad;
  size_t n = 0;
  for (const auto& f : manifest.at("outputs")) {
    const std::string name = f.at("file").get<std::string>();
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    ++n;
    if (!fs::exists(b / name) || io::read_file(a / name) != io::read_file(b / name)) bad += " " + name;
  }
  return n == 0 ? " (no CSV outputs)" : bad;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance runner"};
  std::string configs;
  std::string work;
  app.add_option("--configs", configs, "directory holding the shipped configs")->required()->check(CLI::ExistingDirectory);
  app.add_option("--work", work, "scratch output directory")->required();
  CLI11_PARSE(app, argc, argv);

  const fs::path root(work);
  fs::remove_all(root);
  std::map<int, Outcome> results;
  auto log = [](const std::string& m) { std::cerr << "  " << m << "\n"; };

  for (const auto& job : kJobs) {
    const fs::path cfg_path = fs::path(configs) / (job.config + ".json");
    const auto t0 = std::chrono::steady_clock::now();
    std::cerr << "running " << job.config << "\n";
    try {
      const ExperimentConfig cfg = load_config(cfg_path);
      const fs::path dir = root / job.config;
      RunOptions opt;
      opt.log = log;
      run_experiment(cfg, dir, opt);
      for (const auto& v : verify_run(dir)) {
        std::cerr << "  " << (v.pass ? "[PASS] " : "[FAIL] ") << v.label << ": " << v.detail << "\n";
        if (v.criterion > 0) note(results, v.criterion, v.pass, job.config + ": " + v.detail);
      }
      if (job.repeat) {
        const fs::path again = root / (job.config + "_repeat");
        RunOptions opt2;
        opt2.threads = job.repeat_threads;
        run_experiment(cfg, again, opt2);
        const std::string bad = csv_mismatch(dir, again);
        note(results, 12, bad.empty(),
             job.config + " (threads " + std::to_string(cfg.threads) + " vs " + std::to_string(job.repeat_threads) +
                 "): " + (bad.empty() ? "identical" : "differs:" + bad));
      }
    } catch (const std::exception& e) {
      std::cerr << "  error: " << e.what() << "\n";
      for (int c : job.criteria) note(results, c, false, job.config + " did not complete: " + e.what());
      if (job.repeat) note(results, 12, false, job.config + " did not complete");
    }
    std::cerr << "  " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  }

  int passed = 0;
  for (const auto& [c, title] : kTitles) {
    const Outcome& o = results[c];
    const bool pass = o.any && o.pass;
    passed += pass ? 1 : 0;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << c << " (" << title
              << "): " << (o.any ? o.detail : "not evaluated") << "\n";
  }
  std::cout << "acceptance: " << passed << "/" << kTitles.size() << " criteria pass\n";
  return passed == static_cast<int>(kTitles.size()) ? 0 : 1;
}
