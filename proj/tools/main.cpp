// Copyright 2026 The advdet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// advdet: batch driver for the adversarial speech detection pipeline.
//
//   advdet --config run.json split
//   advdet --config run.json --jobs 4 extract
//   advdet --config run.json --feature IMFCC --seed 0 train
//
// Every flag can also come from an ADVDET_* environment variable (for
// example ADVDET_JOBS=4); flags win over the environment, which wins over
// the config file.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advdet/advdet.h"

namespace {

struct Flags {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::size_t jobs = 0;
  bool deterministic = false;
  std::vector<std::string> features;
  std::vector<std::string> cells;
  std::string labels, audio_root, noise_dir, work_dir, cache_dir, results_dir, experiment;
};

std::string Absolute(const std::string& p) { return std::filesystem::absolute(p).lexically_normal().string(); }

nlohmann::json Overrides(const Flags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.seeds.empty()) j["seeds"] = f.seeds;
  if (f.jobs > 0) j["jobs"] = f.jobs;
  if (f.deterministic) j["deterministic"] = true;
  if (!f.features.empty()) j["features"] = f.features;
  if (!f.cells.empty()) j["cells"] = f.cells;
  const std::pair<const char*, const std::string*> paths[] = {
      {"labels", &f.labels},       {"audio_root", &f.audio_root},   {"noise_dir", &f.noise_dir},
      {"work_dir", &f.work_dir},   {"cache_dir", &f.cache_dir},     {"results_dir", &f.results_dir},
      {"experiment", &f.experiment}};
  for (const auto& [key, value] : paths)
    if (!value->empty()) j[key] = Absolute(*value);
  return j;
}

int Report(advdet_status st, char* summary) {
  if (summary) {
    std::cout << summary;
    advdet_string_free(summary);
  }
  if (st != ADVDET_OK) std::cerr << "advdet: " << advdet_last_error() << "\n";
  return advdet_exit_code(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial speech detection with filter-bank cepstral features"};
  app.set_version_flag("--version", std::string(advdet_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "JSON run configuration")->envname("ADVDET_CONFIG");
  app.add_option("--seed", f.seeds, "Training seed (repeatable); replaces the experiment's seed list")
      ->envname("ADVDET_SEED")
      ->delimiter(',');
  app.add_option("--jobs", f.jobs, "Parallel jobs")->envname("ADVDET_JOBS")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", f.deterministic, "Require bit-reproducible results")
      ->envname("ADVDET_DETERMINISTIC");
  app.add_option("--feature", f.features, "Restrict to a feature (repeatable)")
      ->envname("ADVDET_FEATURE")
      ->delimiter(',');
  app.add_option("--cell", f.cells, "Restrict to an experiment cell (repeatable)")
      ->envname("ADVDET_CELL")
      ->delimiter(',');
  app.add_option("--labels", f.labels, "Labels CSV (path,label,attack[,utterance])")->envname("ADVDET_LABELS");
  app.add_option("--audio-root", f.audio_root, "Directory the label paths are relative to")
      ->envname("ADVDET_AUDIO_ROOT");
  app.add_option("--noise-dir", f.noise_dir, "Directory of <noise>.wav files")->envname("ADVDET_NOISE_DIR");
  app.add_option("--work-dir", f.work_dir, "Splits, speech masks and noisy audio")->envname("ADVDET_WORK_DIR");
  app.add_option("--cache-dir", f.cache_dir, "Feature caches")->envname("ADVDET_CACHE_DIR");
  app.add_option("--results-dir", f.results_dir, "Models, results and tables")->envname("ADVDET_RESULTS_DIR");
  app.add_option("--experiment", f.experiment, "Experiment descriptor JSON")->envname("ADVDET_EXPERIMENT");

  const std::pair<const char*, const char*> commands[] = {
      {"split", "Assign every labelled file to train/validation/test"},
      {"vad", "Compute speech masks"},
      {"mix-noise", "Mix every file with each noise type at each SNR"},
      {"extract", "Extract feature caches for every split and condition"},
      {"train", "Train one detector per cell, feature and seed"},
      {"eval", "Score the test sets and write results.csv"},
      {"report", "Aggregate results into reports.csv and table.md"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::string corpus_dir;
  std::uint64_t corpus_seed = 0;
  auto* corpus = app.add_subcommand("make-corpus", "Write the synthetic 20-utterance smoke corpus");
  corpus->add_option("dir", corpus_dir, "Output directory")->required();
  corpus->add_option("--corpus-seed", corpus_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (corpus->parsed()) {
    const advdet_status st = advdet_make_smoke_corpus(corpus_dir.c_str(), corpus_seed);
    if (st == ADVDET_OK) std::cout << "make-corpus: wrote " << corpus_dir << "\n";
    return Report(st, nullptr);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const std::string config = f.config.empty() ? std::string() : Absolute(f.config);
  const std::string overrides = Overrides(f).dump();
  char* summary = nullptr;
  const advdet_status st =
      advdet_run_command(command.c_str(), config.empty() ? nullptr : config.c_str(), overrides.c_str(), &summary);
  return Report(st, summary);
}
