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

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "core/experiment.hpp"
#include "core/feature_cache.hpp"
#include "core/rng.hpp"
#include "test_util.hpp"

using namespace advdet;
using namespace advdet::experiment;
using nlohmann::json;

namespace {

std::vector<std::string> Ids(const std::vector<CellSpec>& cells) {
  std::vector<std::string> v;
  for (const auto& c : cells) v.push_back(c.id);
  return v;
}

const RowSpec& Row(const Descriptor& d, const std::string& id) {
  for (const auto& r : d.rows)
    if (r.id == id) return r;
  FAIL("no row " << id);
  throw;
}

// Caches for white/black attacks in every split. Adversarial blocks are
// shifted in their upper coefficients so a model can tell them apart.
// Returns the manifest.
std::vector<BlockRecord> SyntheticCaches(const std::filesystem::path& dir, FeatureName feature,
                                         std::size_t white_per_split, std::size_t black_per_split) {
  std::vector<BlockRecord> manifest;
  std::map<std::filesystem::path, FeatureCache> caches;
  Rng rng(99);
  for (Split split : {Split::kTrain, Split::kValidation, Split::kTest})
    for (const std::string attack : {"white", "black"}) {
      const std::size_t n = attack == "white" ? white_per_split : black_per_split;
      for (std::size_t i = 0; i < n; ++i) {
        BlockRecord r;
        r.source_id = attack + "_" + std::string(ToString(split)) + std::to_string(i / 2);
        r.block_index = i % 2;
        r.label = (i / 2) % 2 ? Label::kAdversarial : Label::kBenign;
        r.condition = Condition{attack, "full", "clean", "none"};
        r.split = split;
        manifest.push_back(r);
        auto& c = caches[dataset::FeatureStore::CachePath(dir, feature, split, r.condition)];
        c.feature = feature;
        c.input_digest = std::string(64, 'a');
        c.records.push_back(r);
        FeatureMatrix m;
        m.name = feature;
        m.coeffs.resize(kFeatureSize);
        for (std::size_t k = 0; k < kFeatureSize; ++k)
          m.coeffs[k] = rng.Normal() + ((k % kNumCeps) >= 10 && r.label == Label::kAdversarial ? 1.5 : 0.0);
        c.features.push_back(m);
      }
    }
  for (const auto& [path, c] : caches) WriteFeatureCache(path, c);
  return manifest;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("attack cross design has seven cells over three trained models") {
    const auto d = Descriptor::FromJson({{"design", "attack_cross"}});
    CHECK(Ids(d.cells) == std::vector<std::string>{"w->w", "w->b", "b->w", "b->b", "wb->wb", "wb->w", "wb->b"});
    CHECK(d.rows.size() == 7);
    std::set<std::string> train_ids;
    for (const auto& c : d.cells) train_ids.insert(c.train_id);
    CHECK(train_ids == std::set<std::string>{"w", "b", "wb"});
    CHECK(d.features.size() == 5);
    CHECK(d.seeds == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
    // Single-attack sides are truncated against the other attack; merged
    // sides are not.
    const auto& wb = d.Cell("w->b");
    REQUIRE(wb.train.truncate_with.has_value());
    CHECK(wb.train.filters.front().attack == std::vector<std::string>{"white"});
    CHECK(wb.test.filters.front().attack == std::vector<std::string>{"black"});
    CHECK(wb.train.truncate_with->attack == std::vector<std::string>{"black"});
    CHECK(wb.train.filters.front().noise == std::vector<std::string>{"clean"});
    const auto& merged = d.Cell("wb->w");
    CHECK(merged.train.filters.size() == 2);
    CHECK_FALSE(merged.train.truncate_with.has_value());
    CHECK_FALSE(merged.test.truncate_with.has_value());
  }

  TEST_CASE("speech/non-speech design mirrors the attack design") {
    const auto d = Descriptor::FromJson({{"design", "speech_nonspeech"}, {"base", {{"attack", "black"}}}});
    CHECK(Ids(d.cells) == std::vector<std::string>{"s->s", "s->n", "n->s", "n->n", "sn->sn", "sn->s", "sn->n"});
    CHECK(d.Cell("s->n").test.filters.front().region == std::vector<std::string>{"nonspeech"});
    CHECK(d.Cell("s->n").test.filters.front().attack == std::vector<std::string>{"black"});
  }

  TEST_CASE("narrow noise design: thirty cells, per-noise averages and an overall average") {
    const auto d = Descriptor::FromJson({{"design", "noise_narrow"}});
    CHECK(d.cells.size() == 30);
    CHECK(d.rows.size() == 30 + 6 + 1);
    CHECK(d.Cell("kitchen@15").test.filters.front().snr == std::vector<std::string>{"15"});
    CHECK(Row(d, "bbl@avg").cells.size() == 5);
    CHECK(Row(d, "avg_all").cells.size() == 30);
    for (const auto& c : d.cells) CHECK(c.train.Key() == c.test.Key());
  }

  TEST_CASE("noise generalisation design") {
    const auto d = Descriptor::FromJson({{"design", "noise_generalisation"}});
    CHECK(d.cells.size() == 15);
    CHECK(d.rows.size() == 18);
    const auto& c = d.Cell("rest_all_snr->bbl@10");
    CHECK(c.train.filters.front().noise.size() == 5);
    CHECK(std::find(c.train.filters.front().noise.begin(), c.train.filters.front().noise.end(), "bbl") ==
          c.train.filters.front().noise.end());
    CHECK(c.train.filters.front().snr.size() == 5);
    CHECK(c.test.filters.front().noise == std::vector<std::string>{"bbl"});
    CHECK(d.Cell("bbl_all_snr->rest@0").test.filters.front().noise.size() == 5);
    CHECK(d.Cell("clean->all@20").train.filters.front().noise == std::vector<std::string>{"clean"});
    CHECK(Row(d, "clean->all@avg").cells.size() == 5);
  }

  TEST_CASE("descriptor validation") {
    CHECK_CODE(Descriptor::FromJson({{"design", "nope"}}), ErrorCode::kConfig);
    CHECK_CODE(Descriptor::FromJson(json::object()), ErrorCode::kConfig);
    CHECK_CODE(Descriptor::FromJson({{"design", "attack_cross"}, {"seeds", {1, 1}}}), ErrorCode::kConfig);
    CHECK_CODE(Descriptor::FromJson({{"design", "attack_cross"}, {"features", {"PLP"}}}), ErrorCode::kConfig);
    CHECK_CODE(Descriptor::FromJson({{"design", "attack_cross"}, {"base", {{"split", "test"}}}}), ErrorCode::kConfig);
    const json cell = {{"id", "x"}, {"train", {{"attack", "white"}, {"split", "train"}}}, {"test", {{"attack", "white"}}}};
    CHECK_CODE(Descriptor::FromJson({{"cells", {cell}}}), ErrorCode::kConfig);
    const auto d = Descriptor::FromJson({{"design", "attack_cross"}, {"features", {"MFCC", "IMFCC", "GFCC"}}});
    CHECK(d.features == std::vector<FeatureName>{FeatureName::kGfcc, FeatureName::kImfcc, FeatureName::kMfcc});
    CHECK(Descriptor::FromJson(d.ToJson()).ToJson() == d.ToJson());
  }

  TEST_CASE("truncated sides are balanced and reproducible") {
    testutil::TempDir tmp("exp_trunc");
    const auto manifest = SyntheticCaches(tmp.path(), FeatureName::kMfcc, 40, 24);
    const dataset::FeatureStore store(tmp.path());
    const auto d = Descriptor::FromJson({{"design", "attack_cross"}, {"features", {"MFCC"}}});
    const auto w = AssembleSide(manifest, store, FeatureName::kMfcc, d.Cell("w->w").train, Split::kTrain);
    const auto b = AssembleSide(manifest, store, FeatureName::kMfcc, d.Cell("b->b").train, Split::kTrain);
    const auto merged = AssembleSide(manifest, store, FeatureName::kMfcc, d.Cell("wb->wb").train, Split::kTrain);
    CHECK(w.size() == 24);
    CHECK(b.size() == 24);
    CHECK(merged.size() == 64);
    const auto again = AssembleSide(manifest, store, FeatureName::kMfcc, d.Cell("w->b").train, Split::kTrain);
    REQUIRE(again.size() == w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
      CHECK(again.items[i].provenance.source_id == w.items[i].provenance.source_id);
  }

  TEST_CASE("one cell, one feature, one seed gives one result and one report") {
    testutil::TempDir tmp("exp_run");
    const auto manifest = SyntheticCaches(tmp.path(), FeatureName::kImfcc, 48, 48);
    const dataset::FeatureStore store(tmp.path());
    const json j = {{"name", "tiny"},
                    {"features", {"IMFCC"}},
                    {"seeds", {3}},
                    {"train", {{"max_epochs", 3}, {"patience", 2}, {"batch_size", 16}}},
                    {"cells", {{{"id", "w->w"}, {"train", {{"attack", "white"}}}, {"test", {{"attack", "white"}}}}}}};
    const auto d = Descriptor::FromJson(j);
    const auto results = RunExperiment(d, manifest, store, RunOptions{});
    REQUIRE(results.size() == 1);
    CHECK(results[0].cell == "w->w");
    CHECK(results[0].seed == 3);
    CHECK(results[0].n_pos + results[0].n_neg == 48);
    CHECK(results[0].rocauc > 0.9);
    const auto reports = BuildReports(d, results);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].aggregate.count == 1);
    CHECK(reports[0].aggregate.mean == results[0].rocauc);
    // In-memory runs are reproducible.
    CHECK(RunExperiment(d, manifest, store, RunOptions{})[0].rocauc == results[0].rocauc);
  }

  TEST_CASE("saved models are reused only when their inputs match") {
    testutil::TempDir tmp("exp_resume");
    const auto manifest = SyntheticCaches(tmp.path() / "cache", FeatureName::kMfcc, 24, 24);
    const dataset::FeatureStore store(tmp.path() / "cache");
    json j = {{"features", {"MFCC"}},
              {"seeds", {0, 1}},
              {"train", {{"max_epochs", 1}, {"batch_size", 16}}},
              {"cells", {{{"id", "c"}, {"train", {{"attack", "black"}}}, {"test", {{"attack", "black"}}}}}}};
    RunOptions opt;
    opt.models_dir = tmp.path() / "models";
    auto first = TrainModels(Descriptor::FromJson(j), manifest, store, opt);
    REQUIRE(first.size() == 2);
    CHECK_FALSE(first[0].reused);
    CHECK(std::filesystem::exists(CheckpointPath(opt.models_dir, "c", FeatureName::kMfcc, 1)));
    CHECK(std::filesystem::exists(HistoryPath(CheckpointPath(opt.models_dir, "c", FeatureName::kMfcc, 1))));
    auto second = TrainModels(Descriptor::FromJson(j), manifest, store, opt);
    CHECK(second[0].reused);
    CHECK(second[1].reused);
    j["train"]["learning_rate"] = 5e-4;
    auto third = TrainModels(Descriptor::FromJson(j), manifest, store, opt);
    CHECK_FALSE(third[0].reused);
    const auto scored = EvaluateModels(Descriptor::FromJson(j), manifest, store, opt);
    CHECK(scored.size() == 2);
  }

  TEST_CASE("results and reports render and parse back") {
    auto d = Descriptor::FromJson({{"design", "attack_cross"}, {"features", {"IMFCC", "MFCC"}}, {"seeds", {0, 1}}});
    std::vector<JobResult> results;
    for (const auto& c : d.cells)
      for (auto f : d.features)
        for (std::uint64_t s : d.seeds)
          results.push_back({"attack_cross", c.id, c.test.Key(), f, s,
                             (f == FeatureName::kImfcc ? 0.9 : 0.7) + 0.01 * static_cast<double>(s), 10, 12});
    const auto parsed = ParseResults(csv::ParseTable(RenderResults(results), "mem"));
    REQUIRE(parsed.size() == results.size());
    CHECK(parsed[5].rocauc == results[5].rocauc);
    CHECK(parsed[5].cell == results[5].cell);
    const auto reports = BuildReports(d, results);
    CHECK(reports.size() == 14);
    CHECK(reports[0].values == std::vector<double>{0.9, 0.91});
    CHECK(reports[0].aggregate.stddev == doctest::Approx(0.005));
    const std::string md = RenderMarkdown(d, reports);
    std::istringstream in(md);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 2 + 7);
    CHECK(lines[0] == "| train -> test | IMFCC | MFCC |");
    CHECK(lines[2] == "| w->w | **0.905 ± 0.005** | 0.705 ± 0.005 |");
    const std::string rep = RenderReports(reports);
    CHECK(rep.rfind("row,feature,count,mean,std,values\n", 0) == 0);
  }

  TEST_CASE("averaged rows pool cells then seeds") {
    const auto d = Descriptor::FromJson({{"design", "noise_narrow"}, {"features", {"LFCC"}}, {"seeds", {0, 1, 2}}});
    std::vector<JobResult> results;
    double total = 0;
    int k = 0;
    for (const auto& c : d.cells)
      for (std::uint64_t s : d.seeds) {
        const double v = 0.5 + 0.001 * (k++);
        total += v;
        results.push_back({"noise_narrow", c.id, c.test.Key(), FeatureName::kLfcc, s, v, 1, 1});
      }
    const auto reports = BuildReports(d, results);
    CHECK(reports.size() == 37);
    const auto& all = reports.back();
    CHECK(all.row == "avg_all");
    CHECK(all.values.size() == 90);
    CHECK(all.aggregate.mean == doctest::Approx(total / 90));
    const auto& bbl = *std::find_if(reports.begin(), reports.end(), [](const Report& r) { return r.row == "bbl@avg"; });
    CHECK(bbl.values.size() == 15);
    CHECK(bbl.values.front() == 0.5);
  }
}
