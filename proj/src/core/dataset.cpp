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

#include "core/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "core/error.hpp"
#include "core/sha256.hpp"

namespace advdet::dataset {

int HashBucket(std::string_view source_id) {
  return static_cast<int>(DigestPrefix64(Sha256Of(source_id)) % 100);
}

Split SplitForId(std::string_view source_id) {
  const int bucket = HashBucket(source_id);
  if (bucket < 70) return Split::kTrain;
  if (bucket < 80) return Split::kValidation;
  return Split::kTest;
}

DatasetPartition HashSplit(std::span<const std::string> source_ids) {
  if (source_ids.empty()) Fail(ErrorCode::kEmptyInput, "no source ids to split");
  std::set<std::string_view> seen;
  DatasetPartition p;
  for (const auto& id : source_ids) {
    if (!seen.insert(id).second) Fail(ErrorCode::kDuplicateId, "duplicate source id '" + id + "'");
    switch (SplitForId(id)) {
      case Split::kTrain: p.train.push_back(id); break;
      case Split::kValidation: p.validation.push_back(id); break;
      case Split::kTest: p.test.push_back(id); break;
    }
  }
  return p;
}

std::size_t LabeledFeatureSet::CountLabel(int label) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [label](const LabeledItem& it) { return it.label == label; }));
}

namespace {

LabeledFeatureSet Subsample(const LabeledFeatureSet& set, std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n slots become a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.Below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  LabeledFeatureSet out;
  out.items.reserve(n);
  for (auto i : idx) out.items.push_back(set.items[i]);
  return out;
}

}  // namespace

std::pair<LabeledFeatureSet, LabeledFeatureSet> TruncateBalance(const LabeledFeatureSet& a, const LabeledFeatureSet& b,
                                                                Rng& rng) {
  if (a.empty() || b.empty()) Fail(ErrorCode::kEmptySet, "cannot balance against an empty set");
  const std::size_t n = std::min(a.size(), b.size());
  LabeledFeatureSet ta = a.size() > n ? Subsample(a, n, rng) : a;
  LabeledFeatureSet tb = b.size() > n ? Subsample(b, n, rng) : b;
  return {std::move(ta), std::move(tb)};
}

namespace {

bool Accepts(const std::vector<std::string>& allowed, const std::string& value) {
  return allowed.empty() || std::find(allowed.begin(), allowed.end(), value) != allowed.end();
}

std::vector<std::string> ReadList(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  auto push = [&out](const nlohmann::json& e) {
    if (e.is_string()) {
      const auto s = e.get<std::string>();
      if (s != "all" && s != "*") out.push_back(s);
    } else if (e.is_number_integer()) {
      out.push_back(std::to_string(e.get<long long>()));
    } else {
      Fail(ErrorCode::kConfig, "filter values must be strings or integers");
    }
  };
  if (v.is_array()) {
    for (const auto& e : v) push(e);
  } else {
    push(v);
  }
  return out;
}

std::string JoinSorted(std::vector<std::string> v) {
  if (v.empty()) return "*";
  std::sort(v.begin(), v.end());
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s.push_back('+');
    s += v[i];
  }
  return s;
}

}  // namespace

bool ConditionFilter::Matches(const BlockRecord& r) const {
  if (split && *split != r.split) return false;
  return Accepts(attack, r.condition.attack) && Accepts(region, r.condition.region) &&
         Accepts(noise, r.condition.noise) && Accepts(snr, r.condition.snr);
}

ConditionFilter ConditionFilter::WithSplit(Split s) const {
  ConditionFilter f = *this;
  f.split = s;
  return f;
}

std::string ConditionFilter::Key() const {
  std::string k = "attack=" + JoinSorted(attack) + ";region=" + JoinSorted(region) + ";noise=" + JoinSorted(noise) +
                  ";snr=" + JoinSorted(snr);
  if (split) k += ";split=" + std::string(ToString(*split));
  return k;
}

ConditionFilter ConditionFilter::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) Fail(ErrorCode::kConfig, "condition filter must be a JSON object");
  ConditionFilter f;
  f.attack = ReadList(j, "attack");
  f.region = ReadList(j, "region");
  f.noise = ReadList(j, "noise");
  f.snr = ReadList(j, "snr");
  if (j.contains("split")) f.split = ParseSplit(j.at("split").get<std::string>());
  return f;
}

nlohmann::json ConditionFilter::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  if (!attack.empty()) j["attack"] = attack;
  if (!region.empty()) j["region"] = region;
  if (!noise.empty()) j["noise"] = noise;
  if (!snr.empty()) j["snr"] = snr;
  if (split) j["split"] = std::string(ToString(*split));
  return j;
}

FeatureStore::FeatureStore(std::filesystem::path cache_dir) : dir_(std::move(cache_dir)) {}

std::filesystem::path FeatureStore::CachePath(const std::filesystem::path& dir, FeatureName feature, Split split,
                                              const Condition& condition) {
  return dir / std::string(ToString(feature)) / std::string(ToString(split)) / (condition.Key() + ".feat");
}

const FeatureStore::Loaded& FeatureStore::Load(const std::filesystem::path& path) const {
  std::lock_guard lock(mu_);
  auto it = loaded_.find(path);
  if (it != loaded_.end()) return *it->second;
  auto entry = std::make_unique<Loaded>();
  entry->cache = ReadFeatureCache(path);
  for (std::size_t i = 0; i < entry->cache.records.size(); ++i) {
    const auto& r = entry->cache.records[i];
    entry->index.emplace(std::make_pair(r.source_id, r.block_index), i);
  }
  return *loaded_.emplace(path, std::move(entry)).first->second;
}

void FeatureStore::Clear() const {
  std::lock_guard lock(mu_);
  loaded_.clear();
}

FeatureMatrix FeatureStore::Lookup(FeatureName feature, const BlockRecord& record) const {
  const auto path = CachePath(dir_, feature, record.split, record.condition);
  const auto& loaded = Load(path);
  auto it = loaded.index.find({record.source_id, record.block_index});
  if (it == loaded.index.end())
    Fail(ErrorCode::kMissingCache, "block " + record.source_id + "#" + std::to_string(record.block_index) +
                                       " is not in " + path.string());
  return loaded.cache.features[it->second];
}

LabeledFeatureSet AssembleCondition(std::span<const BlockRecord> manifest, const FeatureStore& store,
                                    FeatureName feature, const ConditionFilter& filter) {
  std::vector<const BlockRecord*> picked;
  for (const auto& r : manifest)
    if (filter.Matches(r)) picked.push_back(&r);
  std::stable_sort(picked.begin(), picked.end(),
                   [](const BlockRecord* a, const BlockRecord* b) { return ProvenanceLess(*a, *b); });
  LabeledFeatureSet out;
  out.items.reserve(picked.size());
  for (const auto* r : picked) {
    LabeledItem item;
    item.features = store.Lookup(feature, *r);
    item.label = static_cast<int>(r->label);
    item.provenance = *r;
    out.items.push_back(std::move(item));
  }
  return out;
}

}  // namespace advdet::dataset
