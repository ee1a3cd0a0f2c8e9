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

#include "core/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/noise.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/sha256.hpp"

namespace advdet::experiment {

using dataset::ConditionFilter;
using dataset::LabeledFeatureSet;

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string SideSpec::Key() const {
  std::vector<std::string> keys;
  for (const auto& f : filters) keys.push_back(f.Key());
  std::sort(keys.begin(), keys.end());
  std::string k;
  for (std::size_t i = 0; i < keys.size(); ++i) k += (i ? "|" : "") + keys[i];
  if (truncate_with) k += "#truncate_with:" + truncate_with->Key();
  return k;
}

SideSpec SideSpec::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) Fail(ErrorCode::kConfig, "a cell side must be a JSON object");
  SideSpec s;
  if (!j.contains("filters")) {
    s.filters.push_back(ConditionFilter::FromJson(j));
  } else {
    const auto& fs = j.at("filters");
    if (!fs.is_array() || fs.empty()) Fail(ErrorCode::kConfig, "\"filters\" must be a nonempty array");
    for (const auto& f : fs) s.filters.push_back(ConditionFilter::FromJson(f));
    if (j.contains("truncate_with")) s.truncate_with = ConditionFilter::FromJson(j.at("truncate_with"));
  }
  for (const auto& f : s.filters)
    if (f.split) Fail(ErrorCode::kConfig, "cell filters may not name a split; splits are chosen by the runner");
  return s;
}

nlohmann::json SideSpec::ToJson() const {
  nlohmann::json fs = nlohmann::json::array();
  for (const auto& f : filters) fs.push_back(f.ToJson());
  nlohmann::json j = {{"filters", fs}};
  if (truncate_with) j["truncate_with"] = truncate_with->ToJson();
  return j;
}

namespace {

ConditionFilter With(ConditionFilter f, std::vector<std::string> ConditionFilter::*field,
                     std::vector<std::string> values) {
  f.*field = std::move(values);
  return f;
}

void DefaultField(ConditionFilter& f, std::vector<std::string> ConditionFilter::*field, const char* value) {
  if ((f.*field).empty()) f.*field = {value};
}

std::vector<std::string> AllSnrs() {
  std::vector<std::string> out;
  for (int s : noise::kSnrLevelsDb) out.push_back(std::to_string(s));
  return out;
}

// The seven-row cross design shared by the attack and speech/non-speech
// experiments. Single-condition cells are truncated against each other;
// the merged cells use the untruncated union.
void CrossDesign(Descriptor& d, const ConditionFilter& a, const ConditionFilter& b, const std::string& an,
                 const std::string& bn) {
  const SideSpec ta{{a}, b}, tb{{b}, a};
  const SideSpec ua{{a}, std::nullopt}, ub{{b}, std::nullopt}, both{{a, b}, std::nullopt};
  const std::string ab = an + bn;
  d.cells = {
      {an + "->" + an, an, ta, ta},       {an + "->" + bn, an, ta, tb},     {bn + "->" + an, bn, tb, ta},
      {bn + "->" + bn, bn, tb, tb},       {ab + "->" + ab, ab, both, both}, {ab + "->" + an, ab, both, ua},
      {ab + "->" + bn, ab, both, ub},
  };
  d.rows.clear();
  for (const auto& c : d.cells) d.rows.push_back({c.id, {c.id}});
}

}  // namespace

void AttackCrossDesign(Descriptor& d, const ConditionFilter& base) {
  ConditionFilter f = base;
  DefaultField(f, &ConditionFilter::region, "full");
  DefaultField(f, &ConditionFilter::noise, "clean");
  DefaultField(f, &ConditionFilter::snr, "none");
  CrossDesign(d, With(f, &ConditionFilter::attack, {"white"}), With(f, &ConditionFilter::attack, {"black"}), "w",
              "b");
}

void SpeechNonspeechDesign(Descriptor& d, const ConditionFilter& base) {
  ConditionFilter f = base;
  DefaultField(f, &ConditionFilter::attack, "white");
  DefaultField(f, &ConditionFilter::noise, "clean");
  DefaultField(f, &ConditionFilter::snr, "none");
  CrossDesign(d, With(f, &ConditionFilter::region, {"speech"}), With(f, &ConditionFilter::region, {"nonspeech"}),
              "s", "n");
}

void NoiseNarrowDesign(Descriptor& d, const ConditionFilter& base) {
  ConditionFilter f = base;
  DefaultField(f, &ConditionFilter::attack, "white");
  DefaultField(f, &ConditionFilter::region, "full");
  d.cells.clear();
  d.rows.clear();
  RowSpec all{"avg_all", {}};
  for (auto noise : noise::kNoiseTypes) {
    RowSpec avg{std::string(noise) + "@avg", {}};
    for (int snr : noise::kSnrLevelsDb) {
      ConditionFilter c = With(f, &ConditionFilter::noise, {std::string(noise)});
      c.snr = {std::to_string(snr)};
      const std::string id = std::string(noise) + "@" + std::to_string(snr);
      const SideSpec side{{c}, std::nullopt};
      d.cells.push_back({id, id, side, side});
      d.rows.push_back({id, {id}});
      avg.cells.push_back(id);
      all.cells.push_back(id);
    }
    d.rows.push_back(std::move(avg));
  }
  d.rows.push_back(std::move(all));
}

void NoiseGeneralisationDesign(Descriptor& d, const ConditionFilter& base) {
  ConditionFilter f = base;
  DefaultField(f, &ConditionFilter::attack, "white");
  DefaultField(f, &ConditionFilter::region, "full");
  const std::string unseen(noise::kNoiseTypes.front());
  std::vector<std::string> rest, all;
  for (auto n : noise::kNoiseTypes) {
    all.emplace_back(n);
    if (n != unseen) rest.emplace_back(n);
  }

  ConditionFilter clean = With(f, &ConditionFilter::noise, {"clean"});
  clean.snr = {"none"};
  ConditionFilter rest_train = With(f, &ConditionFilter::noise, rest);
  rest_train.snr = AllSnrs();
  ConditionFilter unseen_train = With(f, &ConditionFilter::noise, {unseen});
  unseen_train.snr = AllSnrs();

  struct Group {
    std::string train_id;
    ConditionFilter train;
    std::string test_name;
    std::vector<std::string> test_noises;
  };
  const std::vector<Group> groups = {
      {"rest_all_snr", rest_train, unseen, {unseen}},
      {unseen + "_all_snr", unseen_train, "rest", rest},
      {"clean", clean, "all", all},
  };
  d.cells.clear();
  d.rows.clear();
  for (const auto& g : groups) {
    RowSpec avg{g.train_id + "->" + g.test_name + "@avg", {}};
    for (int snr : noise::kSnrLevelsDb) {
      ConditionFilter t = With(f, &ConditionFilter::noise, g.test_noises);
      t.snr = {std::to_string(snr)};
      const std::string id = g.train_id + "->" + g.test_name + "@" + std::to_string(snr);
      d.cells.push_back({id, g.train_id, SideSpec{{g.train}, std::nullopt}, SideSpec{{t}, std::nullopt}});
      d.rows.push_back({id, {id}});
      avg.cells.push_back(id);
    }
    d.rows.push_back(std::move(avg));
  }
}

void Descriptor::Validate() const {
  if (cells.empty()) Fail(ErrorCode::kConfig, "experiment has no cells");
  if (features.empty()) Fail(ErrorCode::kConfig, "experiment has no features");
  if (seeds.empty()) Fail(ErrorCode::kConfig, "experiment has no seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    Fail(ErrorCode::kConfig, "seeds must be distinct");
  if (std::set<FeatureName>(features.begin(), features.end()).size() != features.size())
    Fail(ErrorCode::kConfig, "features must be distinct");
  std::set<std::string> ids;
  std::map<std::string, std::string> train_keys;
  for (const auto& c : cells) {
    if (c.id.empty() || c.train_id.empty()) Fail(ErrorCode::kConfig, "cell ids must be nonempty");
    for (char ch : c.id + c.train_id)
      if (ch == ',' || ch == '\n' || ch == '/' || ch == '"')
        Fail(ErrorCode::kConfig, "cell id '" + c.id + "' contains a reserved character");
    if (!ids.insert(c.id).second) Fail(ErrorCode::kConfig, "duplicate cell id '" + c.id + "'");
    auto [it, inserted] = train_keys.emplace(c.train_id, c.train.Key());
    if (!inserted && it->second != c.train.Key())
      Fail(ErrorCode::kConfig, "cells sharing train_id '" + c.train_id + "' disagree on the training data");
    if (c.train.filters.empty() || c.test.filters.empty())
      Fail(ErrorCode::kConfig, "cell '" + c.id + "' needs train and test filters");
  }
  std::set<std::string> row_ids;
  for (const auto& r : rows) {
    if (!row_ids.insert(r.id).second) Fail(ErrorCode::kConfig, "duplicate row id '" + r.id + "'");
    if (r.cells.empty()) Fail(ErrorCode::kConfig, "row '" + r.id + "' has no cells");
    for (const auto& c : r.cells)
      if (!ids.count(c)) Fail(ErrorCode::kConfig, "row '" + r.id + "' names unknown cell '" + c + "'");
  }
  train.Validate();
}

const CellSpec& Descriptor::Cell(std::string_view id) const {
  for (const auto& c : cells)
    if (c.id == id) return c;
  Fail(ErrorCode::kConfig, "unknown cell '" + std::string(id) + "'");
}

Descriptor Descriptor::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) Fail(ErrorCode::kConfig, "experiment descriptor must be a JSON object");
  Descriptor d;
  try {
    d.name = j.value("name", std::string());
    d.design = j.value("design", std::string());
    if (j.contains("features")) {
      for (const auto& f : j.at("features")) {
        auto name = ParseFeatureName(f.get<std::string>());
        if (!name) Fail(ErrorCode::kConfig, "unknown feature '" + f.get<std::string>() + "'");
        d.features.push_back(*name);
      }
    } else {
      d.features.assign(kAllFeatures.begin(), kAllFeatures.end());
    }
    // Columns always follow the canonical feature order.
    std::stable_sort(d.features.begin(), d.features.end(), [](FeatureName a, FeatureName b) {
      auto pos = [](FeatureName f) { return std::find(kAllFeatures.begin(), kAllFeatures.end(), f); };
      return pos(a) < pos(b);
    });
    if (j.contains("seeds")) {
      d.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
      d.seeds = {0, 1, 2, 3, 4};
    }
    if (j.contains("train")) d.train = model::TrainConfig::FromJson(j.at("train"));

    const ConditionFilter base = j.contains("base") ? ConditionFilter::FromJson(j.at("base")) : ConditionFilter{};
    if (base.split) Fail(ErrorCode::kConfig, "\"base\" may not name a split");
    if (j.contains("from_design") && !j.contains("design")) d.design = j.at("from_design").get<std::string>();
    if (j.contains("design")) {
      if (j.contains("cells")) Fail(ErrorCode::kConfig, "give either \"design\" or \"cells\", not both");
      if (d.design == "attack_cross") {
        AttackCrossDesign(d, base);
      } else if (d.design == "speech_nonspeech") {
        SpeechNonspeechDesign(d, base);
      } else if (d.design == "noise_narrow") {
        NoiseNarrowDesign(d, base);
      } else if (d.design == "noise_generalisation") {
        NoiseGeneralisationDesign(d, base);
      } else {
        Fail(ErrorCode::kConfig, "unknown design '" + d.design + "'");
      }
    } else {
      if (!j.contains("cells")) Fail(ErrorCode::kConfig, "descriptor needs \"design\" or \"cells\"");
      for (const auto& c : j.at("cells")) {
        CellSpec cell;
        cell.id = c.at("id").get<std::string>();
        cell.train_id = c.value("train_id", cell.id);
        cell.train = SideSpec::FromJson(c.at("train"));
        cell.test = SideSpec::FromJson(c.at("test"));
        d.cells.push_back(std::move(cell));
      }
      for (const auto& c : d.cells) d.rows.push_back({c.id, {c.id}});
    }
    if (j.contains("rows")) {
      d.rows.clear();
      for (const auto& r : j.at("rows"))
        d.rows.push_back({r.at("id").get<std::string>(), r.at("cells").get<std::vector<std::string>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("bad experiment descriptor: ") + e.what());
  }
  d.Validate();
  return d;
}

Descriptor Descriptor::Load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) Fail(ErrorCode::kConfig, "experiment descriptor not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return FromJson(j);
}

nlohmann::json Descriptor::ToJson() const {
  nlohmann::json j;
  j["name"] = name;
  // The expanded form lists every cell, so the design is kept only as a label.
  if (!design.empty()) j["from_design"] = design;
  j["features"] = nlohmann::json::array();
  for (auto f : features) j["features"].push_back(std::string(ToString(f)));
  j["seeds"] = seeds;
  j["train"] = train.ToJson();
  j["cells"] = nlohmann::json::array();
  for (const auto& c : cells)
    j["cells"].push_back({{"id", c.id}, {"train_id", c.train_id}, {"train", c.train.ToJson()}, {"test", c.test.ToJson()}});
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) j["rows"].push_back({{"id", r.id}, {"cells", r.cells}});
  return j;
}

LabeledFeatureSet AssembleSide(std::span<const BlockRecord> manifest, const dataset::FeatureStore& store,
                               FeatureName feature, const SideSpec& side, Split split) {
  std::vector<BlockRecord> picked;
  for (const auto& r : manifest) {
    if (r.split != split) continue;
    for (const auto& f : side.filters) {
      if (f.Matches(r)) {
        picked.push_back(r);
        break;
      }
    }
  }
  LabeledFeatureSet mine = dataset::AssembleCondition(picked, store, feature, ConditionFilter{});
  if (!side.truncate_with) return mine;

  LabeledFeatureSet other = dataset::AssembleCondition(manifest, store, feature, side.truncate_with->WithSplit(split));
  SideSpec own = side;
  own.truncate_with.reset();
  const std::string mine_key = own.Key(), other_key = side.truncate_with->Key();
  if (mine_key == other_key) return mine;
  // Both halves of a truncated pair draw from one stream in a canonical
  // order, so each side reproduces the selection the other one sees.
  const bool mine_first = mine_key < other_key;
  const std::string tag = "truncate|" + (mine_first ? mine_key + "|" + other_key : other_key + "|" + mine_key) + "|" +
                          std::string(ToString(split));
  Rng rng(DeriveSeed(0, tag));
  if (mine_first) return dataset::TruncateBalance(mine, other, rng).first;
  return dataset::TruncateBalance(other, mine, rng).second;
}

namespace {

std::string DataDigest(const LabeledFeatureSet& train, const LabeledFeatureSet& val) {
  Sha256 h;
  for (const auto* set : {&train, &val}) {
    h.Update("set:" + std::to_string(set->size()) + "\n");
    for (const auto& item : set->items) {
      const auto& p = item.provenance;
      h.Update(p.source_id + "#" + std::to_string(p.block_index) + "#" + p.condition.Key() + "#" +
               std::to_string(item.label) + "\n");
      h.Update(std::string_view(reinterpret_cast<const char*>(item.features.coeffs.data()),
                                item.features.coeffs.size() * sizeof(double)));
    }
  }
  return ToHex(h.Finish());
}

bool Selected(const RunOptions& o, FeatureName f) {
  return o.only_features.empty() || std::find(o.only_features.begin(), o.only_features.end(), f) != o.only_features.end();
}

bool Selected(const RunOptions& o, const CellSpec& c) {
  return o.only_cells.empty() || std::find(o.only_cells.begin(), o.only_cells.end(), c.id) != o.only_cells.end();
}

// Train ids of the selected cells, in order of first appearance.
std::vector<const CellSpec*> TrainGroups(const Descriptor& d, const RunOptions& o) {
  std::vector<const CellSpec*> out;
  std::set<std::string> seen;
  for (const auto& c : d.cells)
    if (Selected(o, c) && seen.insert(c.train_id).second) out.push_back(&c);
  if (out.empty()) Fail(ErrorCode::kConfig, "no cell matches the selection");
  return out;
}

model::TrainConfig SeedConfig(const Descriptor& d, std::uint64_t seed, std::size_t threads) {
  model::TrainConfig c = d.train;
  c.seed = seed;
  c.threads = threads;
  return c;
}

std::size_t ThreadsPerJob(std::size_t jobs, std::size_t concurrent) {
  return std::max<std::size_t>(1, jobs / std::max<std::size_t>(1, std::min(jobs, concurrent)));
}

JobResult Score(const Descriptor& d, const CellSpec& cell, FeatureName feature, std::uint64_t seed,
                const model::CnnDetector& m, const LabeledFeatureSet& test) {
  if (test.empty()) Fail(ErrorCode::kEmptySet, "cell '" + cell.id + "' has no test blocks");
  const auto scored = model::PredictScores(m, test);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : scored) {
    scores.push_back(s.score);
    labels.push_back(s.label);
  }
  JobResult r;
  r.design = d.design.empty() ? d.name : d.design;
  r.cell = cell.id;
  r.test = cell.test.Key();
  r.feature = feature;
  r.seed = seed;
  r.rocauc = metrics::Rocauc(scores, labels);
  r.n_pos = test.CountLabel(1);
  r.n_neg = test.CountLabel(0);
  return r;
}

void SortResults(const Descriptor& d, std::vector<JobResult>& results) {
  auto rank = [&](const JobResult& r) {
    std::size_t ci = 0, fi = 0, si = 0;
    while (ci < d.cells.size() && d.cells[ci].id != r.cell) ++ci;
    while (fi < d.features.size() && d.features[fi] != r.feature) ++fi;
    while (si < d.seeds.size() && d.seeds[si] != r.seed) ++si;
    return std::make_tuple(ci, fi, si);
  };
  std::stable_sort(results.begin(), results.end(),
                   [&](const JobResult& a, const JobResult& b) { return rank(a) < rank(b); });
}

}  // namespace

std::filesystem::path CheckpointPath(const std::filesystem::path& models_dir, std::string_view train_id,
                                     FeatureName feature, std::uint64_t seed) {
  std::string dir(train_id);
  for (auto& ch : dir)
    if (ch == '>' || ch == '<' || ch == '|' || ch == '*' || ch == '?' || ch == ':' || ch == '\\') ch = '_';
  return models_dir / dir / std::string(ToString(feature)) / ("seed_" + std::to_string(seed) + ".ckpt");
}

std::filesystem::path HistoryPath(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".history.json");
  return p;
}

namespace {

// A checkpoint is reusable when its sidecar records the same training data
// and configuration and the file itself decodes.
bool Reusable(const std::filesystem::path& ckpt, const std::string& digest, const model::TrainConfig& config,
              FeatureName feature, model::TrainHistory* history) {
  const auto hist_path = HistoryPath(ckpt);
  if (!std::filesystem::exists(ckpt) || !std::filesystem::exists(hist_path)) return false;
  try {
    const auto j = nlohmann::json::parse(csv::ReadFile(hist_path));
    if (j.at("data_digest") != digest || j.at("config") != config.ToJson()) return false;
    const auto ck = model::LoadCheckpoint(ckpt);
    if (ck.model.feature() != feature) return false;
    history->epochs.clear();
    for (const auto& e : j.at("history").at("epochs"))
      history->epochs.push_back({e.at("epoch"), e.at("train_loss"), e.at("val_loss")});
    history->best_epoch = j.at("history").at("best_epoch");
    history->best_val_loss = j.at("history").at("best_val_loss");
    history->early_stopped = j.at("history").at("early_stopped");
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::vector<TrainSummary> TrainModels(const Descriptor& d, std::span<const BlockRecord> manifest,
                                      const dataset::FeatureStore& store, const RunOptions& options) {
  if (options.models_dir.empty()) Fail(ErrorCode::kConfig, "training needs a models directory");
  std::vector<TrainSummary> out;
  for (const CellSpec* group : TrainGroups(d, options)) {
    for (FeatureName feature : d.features) {
      if (!Selected(options, feature)) continue;
      const auto train = AssembleSide(manifest, store, feature, group->train, Split::kTrain);
      const auto val = AssembleSide(manifest, store, feature, group->train, Split::kValidation);
      const std::string digest = DataDigest(train, val);
      std::vector<TrainSummary> summaries(d.seeds.size());
      std::vector<std::size_t> todo;
      for (std::size_t i = 0; i < d.seeds.size(); ++i) {
        auto& s = summaries[i];
        s.train_id = group->train_id;
        s.feature = feature;
        s.seed = d.seeds[i];
        const auto ckpt = CheckpointPath(options.models_dir, group->train_id, feature, s.seed);
        s.reused = options.resume && Reusable(ckpt, digest, SeedConfig(d, s.seed, 1), feature, &s.history);
        if (!s.reused) todo.push_back(i);
      }
      const std::size_t threads = ThreadsPerJob(options.jobs, todo.size());
      ParallelFor(todo.size(), options.jobs, [&](std::size_t k) {
        auto& s = summaries[todo[k]];
        const auto config = SeedConfig(d, s.seed, threads);
        auto result = model::Train(train, val, config);
        s.history = result.history;
        const auto ckpt = CheckpointPath(options.models_dir, group->train_id, feature, s.seed);
        // Thread count never changes the weights, so it is not part of the
        // recorded configuration.
        const auto recorded = SeedConfig(d, s.seed, 1);
        model::SaveCheckpoint(ckpt, result.model, recorded);
        const nlohmann::json sidecar = {{"train_id", group->train_id},
                                        {"feature", std::string(ToString(feature))},
                                        {"seed", s.seed},
                                        {"data_digest", digest},
                                        {"n_train", train.size()},
                                        {"n_validation", val.size()},
                                        {"config", recorded.ToJson()},
                                        {"architecture", model::ArchitectureHash()},
                                        {"history", result.history.ToJson()}};
        csv::WriteFileAtomic(HistoryPath(ckpt), sidecar.dump(2) + "\n");
      });
      for (auto& s : summaries) out.push_back(std::move(s));
    }
    store.Clear();
  }
  return out;
}

std::vector<JobResult> EvaluateModels(const Descriptor& d, std::span<const BlockRecord> manifest,
                                      const dataset::FeatureStore& store, const RunOptions& options) {
  if (options.models_dir.empty()) Fail(ErrorCode::kConfig, "evaluation needs a models directory");
  std::vector<JobResult> out;
  for (const auto& cell : d.cells) {
    if (!Selected(options, cell)) continue;
    for (FeatureName feature : d.features) {
      if (!Selected(options, feature)) continue;
      const auto test = AssembleSide(manifest, store, feature, cell.test, Split::kTest);
      std::vector<JobResult> results(d.seeds.size());
      ParallelFor(d.seeds.size(), options.jobs, [&](std::size_t i) {
        const auto ckpt = model::LoadCheckpoint(CheckpointPath(options.models_dir, cell.train_id, feature, d.seeds[i]));
        if (ckpt.model.feature() != feature)
          Fail(ErrorCode::kShapeMismatch, "checkpoint for cell '" + cell.id + "' was trained on another feature");
        results[i] = Score(d, cell, feature, d.seeds[i], ckpt.model, test);
      });
      for (auto& r : results) out.push_back(std::move(r));
    }
  }
  SortResults(d, out);
  return out;
}

std::vector<JobResult> RunExperiment(const Descriptor& d, std::span<const BlockRecord> manifest,
                                     const dataset::FeatureStore& store, const RunOptions& options) {
  if (!options.models_dir.empty()) {
    TrainModels(d, manifest, store, options);
    return EvaluateModels(d, manifest, store, options);
  }
  std::vector<JobResult> out;
  for (const CellSpec* group : TrainGroups(d, options)) {
    for (FeatureName feature : d.features) {
      if (!Selected(options, feature)) continue;
      const auto train = AssembleSide(manifest, store, feature, group->train, Split::kTrain);
      const auto val = AssembleSide(manifest, store, feature, group->train, Split::kValidation);
      std::vector<model::CnnDetector> models(d.seeds.size());
      const std::size_t threads = ThreadsPerJob(options.jobs, d.seeds.size());
      ParallelFor(d.seeds.size(), options.jobs, [&](std::size_t i) {
        models[i] = model::Train(train, val, SeedConfig(d, d.seeds[i], threads)).model;
      });
      for (const auto& cell : d.cells) {
        if (cell.train_id != group->train_id || !Selected(options, cell)) continue;
        const auto test = AssembleSide(manifest, store, feature, cell.test, Split::kTest);
        for (std::size_t i = 0; i < d.seeds.size(); ++i)
          out.push_back(Score(d, cell, feature, d.seeds[i], models[i], test));
      }
    }
  }
  SortResults(d, out);
  return out;
}

csv::Row ResultsHeader() { return {"design", "cell", "test", "feature", "seed", "rocauc", "n_pos", "n_neg"}; }

std::string RenderResults(const std::vector<JobResult>& results) {
  csv::Table t;
  t.header = ResultsHeader();
  for (const auto& r : results)
    t.rows.push_back({r.design, r.cell, r.test, std::string(ToString(r.feature)), std::to_string(r.seed),
                      FormatDouble(r.rocauc), std::to_string(r.n_pos), std::to_string(r.n_neg)});
  return csv::Render(t);
}

std::vector<JobResult> ParseResults(const csv::Table& table) {
  const std::size_t c_design = table.Column("design"), c_cell = table.Column("cell"), c_test = table.Column("test"),
                    c_feature = table.Column("feature"), c_seed = table.Column("seed"),
                    c_auc = table.Column("rocauc"), c_pos = table.Column("n_pos"), c_neg = table.Column("n_neg");
  std::vector<JobResult> out;
  for (const auto& row : table.rows) {
    JobResult r;
    r.design = row[c_design];
    r.cell = row[c_cell];
    r.test = row[c_test];
    const auto f = ParseFeatureName(row[c_feature]);
    if (!f) Fail(ErrorCode::kParse, "unknown feature '" + row[c_feature] + "' in results");
    r.feature = *f;
    try {
      r.seed = std::stoull(row[c_seed]);
      r.rocauc = std::stod(row[c_auc]);
      r.n_pos = std::stoull(row[c_pos]);
      r.n_neg = std::stoull(row[c_neg]);
    } catch (const std::exception&) {
      Fail(ErrorCode::kParse, "malformed number in results row for cell '" + r.cell + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Report> BuildReports(const Descriptor& d, const std::vector<JobResult>& results) {
  std::vector<Report> out;
  for (const auto& row : d.rows) {
    for (FeatureName feature : d.features) {
      Report rep;
      rep.row = row.id;
      rep.feature = feature;
      for (const auto& cell : row.cells)
        for (std::uint64_t seed : d.seeds)
          for (const auto& r : results)
            if (r.cell == cell && r.feature == feature && r.seed == seed) rep.values.push_back(r.rocauc);
      if (rep.values.empty()) continue;
      rep.aggregate = metrics::AggregateValues(rep.values);
      out.push_back(std::move(rep));
    }
  }
  return out;
}

std::string RenderReports(const std::vector<Report>& reports) {
  csv::Table t;
  t.header = {"row", "feature", "count", "mean", "std", "values"};
  for (const auto& r : reports) {
    std::string values;
    for (std::size_t i = 0; i < r.values.size(); ++i) values += (i ? ";" : "") + FormatDouble(r.values[i]);
    t.rows.push_back({r.row, std::string(ToString(r.feature)), std::to_string(r.aggregate.count),
                      FormatDouble(r.aggregate.mean), FormatDouble(r.aggregate.stddev), values});
  }
  return csv::Render(t);
}

std::string RenderMarkdown(const Descriptor& d, const std::vector<Report>& reports) {
  std::string md = "| train -> test |";
  std::string rule = "|---|";
  for (auto f : d.features) {
    md += " " + std::string(ToString(f)) + " |";
    rule += "---:|";
  }
  md += "\n" + rule + "\n";
  for (const auto& row : d.rows) {
    std::vector<const Report*> cols;
    const Report* best = nullptr;
    for (auto f : d.features) {
      const Report* hit = nullptr;
      for (const auto& r : reports)
        if (r.row == row.id && r.feature == f) hit = &r;
      cols.push_back(hit);
      if (hit && (!best || hit->aggregate.mean > best->aggregate.mean)) best = hit;
    }
    if (!best) continue;
    md += "| " + row.id + " |";
    for (const Report* r : cols) {
      if (!r) {
        md += " - |";
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3f ± %.3f", r->aggregate.mean, r->aggregate.stddev);
      md += r == best ? " **" + std::string(buf) + "** |" : " " + std::string(buf) + " |";
    }
    md += "\n";
  }
  return md;
}

}  // namespace advdet::experiment
