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

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "qtherm/experiments.hpp"
#include "qtherm/io.hpp"

namespace {

using namespace qtherm;
using namespace qtherm::app;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool quiet = false;
};

std::optional<fs::path> out_flag(const Flags& f) {
  if (f.out.empty()) return std::nullopt;
  return fs::path(f.out);
}

RunOptions options(const Flags& f) {
  RunOptions opt;
  opt.seed = f.seed;
  opt.threads = f.threads;
  if (!f.quiet) opt.log = [](const std::string& msg) { std::cerr << "qtherm: " << msg << "\n"; };
  return opt;
}

int cmd_run(const Flags& f) {
  const ExperimentConfig cfg = load_config(f.config);
  const fs::path dir = resolve_output_dir(cfg, f.config, out_flag(f));
  const RunSummary s = run_experiment(cfg, dir, options(f));
  std::cout << "wrote " << s.files.size() << " files and " << io::kManifestName << " to " << s.dir.string()
            << " in " << s.wall_seconds << " s\n";
  return kExitOk;
}

int cmd_dump(const Flags& f) {
  const ExperimentConfig cfg = load_config(f.config);
  const fs::path dir = resolve_output_dir(cfg, f.config, out_flag(f));
  const RunSummary s = dump_model(cfg, dir, options(f));
  std::cout << "wrote model dump to " << s.dir.string() << "\n";
  return kExitOk;
}

int cmd_verify(const Flags& f) {
  fs::path dir;
  if (!f.config.empty()) {
    dir = resolve_output_dir(load_config(f.config), f.config, out_flag(f));
  } else if (!f.out.empty()) {
    dir = f.out;
  } else {
    throw ConfigError("verify needs --config or --out");
  }
  const auto verdicts = verify_run(dir);
  bool all = true;
  for (const auto& v : verdicts) {
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << v.label << ": " << v.detail << "\n";
    all = all && v.pass;
  }
  return all ? kExitOk : kExitAcceptance;
}

int cmd_list_models() {
  for (const auto& name : model_names()) {
    ModelSpec spec;
    spec.kind = model_from_string(name);
    const HamiltonianPair m = build_model(spec);
    std::cout << name << " (default dim " << m.dim() << "):";
    for (const auto& [key, value] : m.params) std::cout << " " << key << "=" << value;
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum thermalization experiments: run pipelines and verify their artifacts"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", f.config, "experiment config (JSON)");
    if (config_required) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (default: $QTHERM_OUTPUT_ROOT/<config name>)");
  };
  auto* run = app.add_subcommand("run", "run the experiment named in the config");
  add_common(run, true);
  run->add_option("--seed", f.seed, "override the config seed");
  run->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", f.quiet, "no progress messages");

  auto* verify = app.add_subcommand("verify", "re-check acceptance criteria from a run's artifacts");
  add_common(verify, false);

  app.add_subcommand("list-models", "list model names and default parameters");

  auto* dump = app.add_subcommand("dump-matrix", "write H, the spectrum and the envelope for the config's model");
  add_common(dump, true);
  dump->add_flag("--quiet", f.quiet, "no progress messages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(f);
    if (*verify) return cmd_verify(f);
    if (*dump) return cmd_dump(f);
    return cmd_list_models();
  } catch (const MissingArtifacts& e) {
    std::cerr << "qtherm: missing artifacts:\n";
    for (const auto& m : e.missing()) std::cerr << "  " << m << "\n";
    return kExitMissing;
  } catch (const ConfigError& e) {
    std::cerr << "qtherm: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "qtherm: invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "qtherm: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const io::IoError& e) {
    std::cerr << "qtherm: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "qtherm: I/O error: " << e.what() << "\n";
    return kExitIo;
  }
}
