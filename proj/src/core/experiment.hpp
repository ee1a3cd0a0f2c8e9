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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/blocks.hpp"
#include "core/cnn.hpp"
#include "core/dataset.hpp"
#include "core/filterbank.hpp"
#include "core/metrics.hpp"

namespace advdet::experiment {

// One side (train or test) of a cell: the union of `filters`, optionally
// truncated to the size of the set selected by `truncate_with` in the same
// split.
struct SideSpec {
  std::vector<dataset::ConditionFilter> filters;
  std::optional<dataset::ConditionFilter> truncate_with;

  std::string Key() const;
  // Accepts either a bare filter object or {"filters": [...], "truncate_with": {...}}.
  static SideSpec FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

struct CellSpec {
  std::string id;
  std::string train_id;  // cells sharing a train_id share trained models
  SideSpec train;
  SideSpec test;
};

// A table row pools the per-seed values of one or more cells.
struct RowSpec {
  std::string id;
  std::vector<std::string> cells;
};

struct Descriptor {
  std::string name;
  std::string design;  // empty for hand-written cell lists
  std::vector<FeatureName> features;
  std::vector<std::uint64_t> seeds;
  model::TrainConfig train;
  std::vector<CellSpec> cells;
  std::vector<RowSpec> rows;

  void Validate() const;
  const CellSpec& Cell(std::string_view id) const;
  static Descriptor FromJson(const nlohmann::json& j);
  static Descriptor Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
};

// Built-in designs. `base` holds filter fields shared by every cell (for
// example {"noise": "clean"}); design-specific fields override it.
void AttackCrossDesign(Descriptor& d, const dataset::ConditionFilter& base);
void SpeechNonspeechDesign(Descriptor& d, const dataset::ConditionFilter& base);
void NoiseNarrowDesign(Descriptor& d, const dataset::ConditionFilter& base);
void NoiseGeneralisationDesign(Descriptor& d, const dataset::ConditionFilter& base);

// Training set of a side for the given split, after union and truncation.
dataset::LabeledFeatureSet AssembleSide(std::span<const BlockRecord> manifest, const dataset::FeatureStore& store,
                                        FeatureName feature, const SideSpec& side, Split split);

struct JobResult {
  std::string design;
  std::string cell;
  std::string test;  // canonical key of the test side
  FeatureName feature = FeatureName::kMfcc;
  std::uint64_t seed = 0;
  double rocauc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

struct RunOptions {
  std::size_t jobs = 1;
  std::filesystem::path models_dir;  // empty: keep models in memory only
  bool resume = true;                // reuse checkpoints whose inputs match
  std::vector<FeatureName> only_features;
  std::vector<std::string> only_cells;
};

std::filesystem::path CheckpointPath(const std::filesystem::path& models_dir, std::string_view train_id,
                                     FeatureName feature, std::uint64_t seed);
std::filesystem::path HistoryPath(const std::filesystem::path& checkpoint);

struct TrainSummary {
  std::string train_id;
  FeatureName feature = FeatureName::kMfcc;
  std::uint64_t seed = 0;
  bool reused = false;
  model::TrainHistory history;
};

// Trains (or resumes) every model of the descriptor. Requires models_dir.
std::vector<TrainSummary> TrainModels(const Descriptor& d, std::span<const BlockRecord> manifest,
                                      const dataset::FeatureStore& store, const RunOptions& options);

// Scores every cell with the checkpoints under models_dir.
std::vector<JobResult> EvaluateModels(const Descriptor& d, std::span<const BlockRecord> manifest,
                                      const dataset::FeatureStore& store, const RunOptions& options);

// Train then evaluate. With an empty models_dir nothing is written.
std::vector<JobResult> RunExperiment(const Descriptor& d, std::span<const BlockRecord> manifest,
                                     const dataset::FeatureStore& store, const RunOptions& options);

csv::Row ResultsHeader();
std::string RenderResults(const std::vector<JobResult>& results);
std::vector<JobResult> ParseResults(const csv::Table& table);

struct Report {
  std::string row;
  FeatureName feature = FeatureName::kMfcc;
  std::vector<double> values;  // cell order, then seed order
  metrics::Aggregate aggregate;
};

std::vector<Report> BuildReports(const Descriptor& d, const std::vector<JobResult>& results);
std::string RenderReports(const std::vector<Report>& reports);
// Markdown table: one line per row, one column per feature, "mean ± std".
std::string RenderMarkdown(const Descriptor& d, const std::vector<Report>& reports);

// %.17g, the shortest form that round-trips a double.
std::string FormatDouble(double v);

}  // namespace advdet::experiment
