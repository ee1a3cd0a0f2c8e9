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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core/filterbank.hpp"

namespace advdet::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr std::array<std::string_view, 7> kCommands = {"split", "vad",  "mix-noise", "extract",
                                                              "train", "eval", "report"};

// Settings shared by every subcommand. Relative paths in a config file are
// resolved against the directory holding that file.
struct RunConfig {
  std::filesystem::path labels;      // CSV: path,label,attack[,utterance]
  std::filesystem::path audio_root;  // label paths are relative to this
  std::filesystem::path noise_dir;   // <name>.wav per noise type
  std::filesystem::path work_dir;
  std::filesystem::path cache_dir;
  std::filesystem::path results_dir;
  std::filesystem::path experiment;  // JSON experiment descriptor

  std::vector<FeatureName> features;  // empty: all five
  std::vector<std::uint64_t> seeds;   // empty: the descriptor's seeds
  std::vector<std::string> cells;     // empty: every cell
  std::vector<std::string> noises;
  std::vector<int> snrs;
  std::vector<std::string> regions;
  std::uint64_t mix_seed = 0;
  std::size_t jobs = 1;
  bool deterministic = true;
  nlohmann::json train = nlohmann::json::object();  // overrides the descriptor's train block

  // Missing keys take defaults relative to `base_dir`; unknown keys are
  // rejected.
  static RunConfig FromJson(const nlohmann::json& j, const std::filesystem::path& base_dir);
  // File (optional) < overrides. Override paths should already be absolute.
  static RunConfig Load(const std::filesystem::path& config_file, const nlohmann::json& overrides);
  nlohmann::json ToJson() const;
  void Validate() const;

  std::vector<FeatureName> FeatureList() const;
};

// Fixed locations below the configured directories.
struct Layout {
  std::filesystem::path splits, vad_dir, vad_failures, noisy_dir, mix_manifest, mix_failures, blocks,
      extract_failures, models, results, reports, table, manifests;
  explicit Layout(const RunConfig& c);
};

struct CommandSummary {
  std::string command;
  std::vector<std::string> lines;  // human-readable progress notes
  std::size_t failures = 0;        // per-file failures (listed in a manifest)
  std::filesystem::path failure_manifest;
};

CommandSummary CmdSplit(const RunConfig& c);
CommandSummary CmdVad(const RunConfig& c);
CommandSummary CmdMixNoise(const RunConfig& c);
CommandSummary CmdExtract(const RunConfig& c);
CommandSummary CmdTrain(const RunConfig& c);
CommandSummary CmdEval(const RunConfig& c);
CommandSummary CmdReport(const RunConfig& c);

// Dispatches by subcommand name; throws ConfigError for unknown names.
CommandSummary RunCommand(std::string_view command, const RunConfig& c);

// Writes `bytes` only when the file is absent or differs; returns true on write.
bool WriteIfChanged(const std::filesystem::path& path, std::string_view bytes);

}  // namespace advdet::pipeline
