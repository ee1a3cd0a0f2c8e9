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

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/blocks.hpp"
#include "core/feature_cache.hpp"
#include "core/filterbank.hpp"
#include "core/rng.hpp"

namespace advdet::dataset {

struct DatasetPartition {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

// (first 8 bytes of SHA-256(id), big-endian) mod 100.
int HashBucket(std::string_view source_id);

// Buckets 0-69 train, 70-79 validation, 80-99 test.
Split SplitForId(std::string_view source_id);

// Utterance-level split; input order is preserved within each list.
DatasetPartition HashSplit(std::span<const std::string> source_ids);

struct LabeledItem {
  FeatureMatrix features;
  int label = 0;  // 0 benign, 1 adversarial
  BlockRecord provenance;
};

struct LabeledFeatureSet {
  std::vector<LabeledItem> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  std::size_t CountLabel(int label) const;
};

// Both sets reduced to min(|a|, |b|) by uniform sampling without
// replacement; the survivors keep their original order.
std::pair<LabeledFeatureSet, LabeledFeatureSet> TruncateBalance(const LabeledFeatureSet& a, const LabeledFeatureSet& b,
                                                                Rng& rng);

// Selects blocks by condition tags. An empty list accepts any value.
struct ConditionFilter {
  std::vector<std::string> attack;
  std::vector<std::string> region;
  std::vector<std::string> noise;
  std::vector<std::string> snr;
  std::optional<Split> split;

  bool Matches(const BlockRecord& record) const;
  ConditionFilter WithSplit(Split s) const;

  // Canonical text form, stable under reordering of list values.
  std::string Key() const;

  static ConditionFilter FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

// Lazily loaded view over a cache directory laid out as
// <dir>/<FEATURE>/<split>/<condition key>.feat. Safe for concurrent readers.
class FeatureStore {
 public:
  explicit FeatureStore(std::filesystem::path cache_dir);

  static std::filesystem::path CachePath(const std::filesystem::path& dir, FeatureName feature, Split split,
                                         const Condition& condition);

  // Throws MissingCache when the cache file or the block inside it is absent.
  FeatureMatrix Lookup(FeatureName feature, const BlockRecord& record) const;

  const std::filesystem::path& dir() const { return dir_; }
  // Drops every loaded cache file.
  void Clear() const;

 private:
  struct Loaded {
    FeatureCache cache;
    std::map<std::pair<std::string, std::size_t>, std::size_t> index;
  };
  const Loaded& Load(const std::filesystem::path& path) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::map<std::filesystem::path, std::unique_ptr<Loaded>> loaded_;
};

// Matching blocks of `manifest` with their features, ordered by
// (source_id, block_index, condition).
LabeledFeatureSet AssembleCondition(std::span<const BlockRecord> manifest, const FeatureStore& store,
                                    FeatureName feature, const ConditionFilter& filter);

}  // namespace advdet::dataset
