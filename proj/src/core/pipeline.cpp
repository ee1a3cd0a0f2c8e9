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

#include "core/pipeline.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "core/audio.hpp"
#include "core/blocks.hpp"
#include "core/csv.hpp"
#include "core/dataset.hpp"
#include "core/dsp.hpp"
#include "core/error.hpp"
#include "core/experiment.hpp"
#include "core/feature_cache.hpp"
#include "core/noise.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/sha256.hpp"
#include "core/vad.hpp"

namespace advdet::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path Resolve(const fs::path& base, const json& j, const char* key, const char* fallback) {
  fs::path p = fallback;
  if (j.contains(key)) {
    if (!j.at(key).is_string()) Fail(ErrorCode::kConfig, std::string("\"") + key + "\" must be a path string");
    p = j.at(key).get<std::string>();
  }
  if (p.empty()) return p;
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

template <typename T>
std::vector<T> ReadList(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

// Keeps file fields free of the CSV separator.
std::string CsvSafe(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ch == ',' ? ';' : ' ';
  return s;
}

std::string ErrorText(const std::exception& e) { return CsvSafe(e.what()); }

}  // namespace

RunConfig RunConfig::FromJson(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) Fail(ErrorCode::kConfig, "config must be a JSON object");
  static const std::set<std::string> known = {
      "labels", "audio_root", "noise_dir", "work_dir", "cache_dir", "results_dir", "experiment", "features",
      "seeds",  "cells",      "noises",    "snrs",     "regions",   "mix_seed",    "jobs",       "deterministic",
      "train"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) Fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
  RunConfig c;
  try {
    c.labels = Resolve(base_dir, j, "labels", "labels.csv");
    c.audio_root = Resolve(base_dir, j, "audio_root", "");
    if (c.audio_root.empty()) c.audio_root = c.labels.parent_path();
    c.noise_dir = Resolve(base_dir, j, "noise_dir", "noise");
    c.work_dir = Resolve(base_dir, j, "work_dir", "work");
    c.cache_dir = Resolve(base_dir, j, "cache_dir", "cache");
    c.results_dir = Resolve(base_dir, j, "results_dir", "results");
    c.experiment = Resolve(base_dir, j, "experiment", "experiment.json");
    for (const auto& f : ReadList<std::string>(j, "features")) {
      auto name = ParseFeatureName(f);
      if (!name) Fail(ErrorCode::kConfig, "unknown feature '" + f + "'");
      c.features.push_back(*name);
    }
    c.seeds = ReadList<std::uint64_t>(j, "seeds");
    c.cells = ReadList<std::string>(j, "cells");
    c.noises = ReadList<std::string>(j, "noises");
    if (c.noises.empty()) c.noises.assign(noise::kNoiseTypes.begin(), noise::kNoiseTypes.end());
    c.snrs = ReadList<int>(j, "snrs");
    if (c.snrs.empty()) c.snrs.assign(noise::kSnrLevelsDb.begin(), noise::kSnrLevelsDb.end());
    c.regions = ReadList<std::string>(j, "regions");
    if (c.regions.empty()) c.regions = {"full", "speech", "nonspeech"};
    c.mix_seed = j.value("mix_seed", std::uint64_t{0});
    c.jobs = j.value("jobs", std::size_t{1});
    c.deterministic = j.value("deterministic", true);
    if (j.contains("train")) c.train = j.at("train");
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("bad config value: ") + e.what());
  }
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const fs::path& config_file, const json& overrides) {
  json j = json::object();
  fs::path base = fs::current_path();
  if (!config_file.empty()) {
    if (!fs::exists(config_file)) Fail(ErrorCode::kConfig, "config file not found: " + config_file.string());
    try {
      j = json::parse(csv::ReadFile(config_file));
    } catch (const json::exception& e) {
      Fail(ErrorCode::kConfig, config_file.string() + ": " + e.what());
    }
    if (!j.is_object()) Fail(ErrorCode::kConfig, config_file.string() + ": expected a JSON object");
    base = fs::absolute(config_file).parent_path();
  }
  if (!overrides.is_null()) {
    if (!overrides.is_object()) Fail(ErrorCode::kConfig, "overrides must be a JSON object");
    for (const auto& [key, value] : overrides.items()) j[key] = value;
  }
  return FromJson(j, base);
}

json RunConfig::ToJson() const {
  json j;
  j["labels"] = labels.string();
  j["audio_root"] = audio_root.string();
  j["noise_dir"] = noise_dir.string();
  j["work_dir"] = work_dir.string();
  j["cache_dir"] = cache_dir.string();
  j["results_dir"] = results_dir.string();
  j["experiment"] = experiment.string();
  j["features"] = json::array();
  for (auto f : FeatureList()) j["features"].push_back(std::string(ToString(f)));
  j["seeds"] = seeds;
  j["cells"] = cells;
  j["noises"] = noises;
  j["snrs"] = snrs;
  j["regions"] = regions;
  j["mix_seed"] = mix_seed;
  j["jobs"] = jobs;
  j["deterministic"] = deterministic;
  j["train"] = train;
  return j;
}

void RunConfig::Validate() const {
  if (jobs == 0) Fail(ErrorCode::kConfig, "jobs must be at least 1");
  for (const auto& n : noises) {
    if (n.empty() || n == "clean" || n.find_first_of("/,_") != std::string::npos)
      Fail(ErrorCode::kConfig, "invalid noise name '" + n + "'");
  }
  for (int s : snrs) noise::MixSpec{s, "", 0}.Validate();
  for (const auto& r : regions)
    if (r != "full" && r != "speech" && r != "nonspeech") Fail(ErrorCode::kConfig, "unknown region '" + r + "'");
  if (!train.is_object()) Fail(ErrorCode::kConfig, "\"train\" must be a JSON object");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    Fail(ErrorCode::kConfig, "seeds must be distinct");
}

std::vector<FeatureName> RunConfig::FeatureList() const {
  if (features.empty()) return {kAllFeatures.begin(), kAllFeatures.end()};
  std::vector<FeatureName> out;
  for (auto f : kAllFeatures)
    if (std::find(features.begin(), features.end(), f) != features.end()) out.push_back(f);
  return out;
}

Layout::Layout(const RunConfig& c)
    : splits(c.work_dir / "splits.csv"),
      vad_dir(c.work_dir / "vad"),
      vad_failures(c.work_dir / "vad" / "failures.csv"),
      noisy_dir(c.work_dir / "noisy"),
      mix_manifest(c.work_dir / "noisy" / "manifest.csv"),
      mix_failures(c.work_dir / "noisy" / "failures.csv"),
      blocks(c.cache_dir / "blocks.csv"),
      extract_failures(c.cache_dir / "failures.csv"),
      models(c.results_dir / "models"),
      results(c.results_dir / "results.csv"),
      reports(c.results_dir / "reports.csv"),
      table(c.results_dir / "table.md"),
      manifests(c.results_dir / "manifests") {}

bool WriteIfChanged(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (fs::exists(path, ec) && fs::file_size(path, ec) == bytes.size() && csv::ReadFile(path) == bytes) return false;
  csv::WriteFileAtomic(path, bytes);
  return true;
}

namespace {

struct Failure {
  std::string source_id;
  std::string condition;
  std::string error;
};

void WriteFailures(const fs::path& path, std::vector<Failure> failures, CommandSummary& s) {
  std::sort(failures.begin(), failures.end(), [](const Failure& a, const Failure& b) {
    return std::tie(a.source_id, a.condition) < std::tie(b.source_id, b.condition);
  });
  csv::Table t;
  t.header = {"source_id", "condition", "error"};
  for (const auto& f : failures) t.rows.push_back({f.source_id, f.condition, f.error});
  WriteIfChanged(path, csv::Render(t));
  s.failures = failures.size();
  s.failure_manifest = path;
  if (!failures.empty())
    s.lines.push_back(std::to_string(failures.size()) + " failure(s) listed in " + path.string());
}

// Run manifests hold everything needed to trace an artifact back to its
// inputs; no timestamps, so reruns leave them unchanged.
void WriteRunManifest(const RunConfig& c, std::string_view command, json extra) {
  json j;
  j["command"] = std::string(command);
  j["version"] = std::string(kVersion);
  j["config"] = c.ToJson();
  j["architecture"] = model::ArchitectureHash();
  for (auto& [k, v] : extra.items()) j[k] = v;
  WriteIfChanged(Layout(c).manifests / (std::string(command) + ".json"), j.dump(2) + "\n");
}

struct SplitEntry {
  std::string source_id;
  std::string utterance;
  Label label = Label::kBenign;
  std::string attack;
  Split split = Split::kTrain;
};

std::vector<SplitEntry> ReadSplits(const RunConfig& c) {
  const Layout l(c);
  if (!fs::exists(l.splits)) Fail(ErrorCode::kConfig, "no split table at " + l.splits.string() + "; run 'split' first");
  const auto t = csv::ReadTable(l.splits);
  const auto ci = t.Column("source_id"), cu = t.Column("utterance"), cl = t.Column("label"), ca = t.Column("attack"),
             cs = t.Column("split");
  std::vector<SplitEntry> out;
  for (const auto& row : t.rows) out.push_back({row[ci], row[cu], ParseLabel(row[cl]), row[ca], ParseSplit(row[cs])});
  return out;
}

fs::path MaskPath(const Layout& l, const std::string& source_id) { return l.vad_dir / (source_id + ".csv"); }

void CheckSourceId(const std::string& id) {
  const fs::path p(id);
  bool bad = id.empty() || p.is_absolute() || id.find_first_of(",\"") != std::string::npos;
  for (const auto& part : p)
    if (part == "..") bad = true;
  if (bad) Fail(ErrorCode::kParse, "unusable audio path '" + id + "' in labels");
}

}  // namespace

CommandSummary CmdSplit(const RunConfig& c) {
  CommandSummary s{"split", {}, 0, {}};
  if (!fs::exists(c.labels)) Fail(ErrorCode::kConfig, "labels file not found: " + c.labels.string());
  const auto t = csv::ReadTable(c.labels);
  const auto cp = t.Column("path"), cl = t.Column("label"), ca = t.Column("attack");
  const bool has_utt = std::find(t.header.begin(), t.header.end(), "utterance") != t.header.end();
  std::set<std::string> seen;
  csv::Table out;
  out.header = {"source_id", "utterance", "label", "attack", "split"};
  std::array<std::size_t, 3> counts{};
  for (const auto& row : t.rows) {
    const std::string& id = row[cp];
    CheckSourceId(id);
    if (!seen.insert(id).second) Fail(ErrorCode::kDuplicateId, "'" + id + "' is listed twice in the labels");
    const Label label = ParseLabel(row[cl]);
    const std::string& attack = row[ca];
    if (attack.empty() || attack.find('_') != std::string::npos)
      Fail(ErrorCode::kParse, "attack tag '" + attack + "' must be nonempty and free of '_'");
    // Utterances are split by file name, so every version of one recording
    // lands in the same split.
    const std::string utt = has_utt && !row[t.Column("utterance")].empty() ? row[t.Column("utterance")]
                                                                            : fs::path(id).stem().string();
    const Split split = dataset::SplitForId(utt);
    ++counts[static_cast<std::size_t>(split)];
    out.rows.push_back({id, utt, std::string(ToString(label)), attack, std::string(ToString(split))});
  }
  std::sort(out.rows.begin(), out.rows.end());
  WriteIfChanged(Layout(c).splits, csv::Render(out));
  s.lines.push_back(std::to_string(out.rows.size()) + " files: " + std::to_string(counts[0]) + " train, " +
                    std::to_string(counts[1]) + " validation, " + std::to_string(counts[2]) + " test");
  WriteRunManifest(c, "split", {{"files", out.rows.size()}});
  return s;
}

CommandSummary CmdVad(const RunConfig& c) {
  CommandSummary s{"vad", {}, 0, {}};
  const Layout l(c);
  const auto entries = ReadSplits(c);
  std::vector<std::string> errors(entries.size());
  std::vector<std::uint8_t> written(entries.size(), 0);
  ParallelFor(entries.size(), c.jobs, [&](std::size_t i) {
    try {
      const auto signal = ReadWav(c.audio_root / entries[i].source_id);
      const auto mask = vad::DetectSpeech(signal);
      written[i] = WriteIfChanged(MaskPath(l, entries[i].source_id), vad::RenderMask(mask));
    } catch (const Error& e) {
      errors[i] = ErrorText(e);
    }
  });
  std::vector<Failure> failures;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (!errors[i].empty()) failures.push_back({entries[i].source_id, "-", errors[i]});
  const auto n_written = static_cast<std::size_t>(std::count(written.begin(), written.end(), 1));
  s.lines.push_back(std::to_string(entries.size() - failures.size()) + " masks (" + std::to_string(n_written) +
                    " rewritten)");
  WriteFailures(l.vad_failures, std::move(failures), s);
  WriteRunManifest(c, "vad", {{"files", entries.size()}});
  return s;
}

CommandSummary CmdMixNoise(const RunConfig& c) {
  CommandSummary s{"mix-noise", {}, 0, {}};
  const Layout l(c);
  const auto entries = ReadSplits(c);
  std::vector<noise::NoiseSource> sources;
  for (const auto& name : c.noises) {
    const auto path = c.noise_dir / (name + ".wav");
    if (!fs::exists(path)) Fail(ErrorCode::kIo, "noise file not found: " + path.string());
    sources.push_back(noise::SplitNoise(name, ReadWav(path)));
  }

  struct Row {
    csv::Row fields;
    std::string error;
    std::string condition;
  };
  const std::size_t per_entry = sources.size() * c.snrs.size();
  std::vector<Row> rows(entries.size() * per_entry);
  ParallelFor(entries.size(), c.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    AudioSignal signal;
    vad::SpeechMask mask;
    std::string load_error;
    try {
      signal = ReadWav(c.audio_root / e.source_id);
      mask = vad::LoadMask(MaskPath(l, e.source_id));
    } catch (const Error& err) {
      load_error = ErrorText(err);
    }
    for (std::size_t n = 0; n < sources.size(); ++n) {
      for (std::size_t k = 0; k < c.snrs.size(); ++k) {
        auto& row = rows[i * per_entry + n * c.snrs.size() + k];
        const int snr = c.snrs[k];
        row.condition = sources[n].name + "@" + std::to_string(snr);
        if (!load_error.empty()) {
          row.error = load_error;
          continue;
        }
        try {
          Rng rng(DeriveSeed(c.mix_seed, e.source_id + "|" + sources[n].name + "|" + std::to_string(snr)));
          const auto part = static_cast<noise::NoisePart>(static_cast<int>(e.split));
          const auto slice = noise::SampleNoiseSegment(sources[n], part, signal.size(), rng);
          auto mixed = noise::MixAtSnr(signal, mask, slice.samples, snr);
          const double rescale = noise::ExportScale(mixed.mixed);
          for (auto& x : mixed.mixed.samples) x *= rescale;
          const fs::path rel = fs::path(sources[n].name) / std::to_string(snr) / e.source_id;
          const auto bytes = EncodeWav(mixed.mixed);
          WriteIfChanged(l.noisy_dir / rel,
                         std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
          row.fields = {e.source_id,
                        sources[n].name,
                        std::string(ToString(e.split)),
                        std::to_string(slice.offset),
                        std::to_string(snr),
                        experiment::FormatDouble(mixed.alpha),
                        experiment::FormatDouble(rescale),
                        rel.generic_string()};
        } catch (const Error& err) {
          row.error = ErrorText(err);
        }
      }
    }
  });
  csv::Table manifest;
  manifest.header = {"source_id", "noise_name", "split", "offset", "snr_db", "alpha", "rescale", "path"};
  std::vector<Failure> failures;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].error.empty()) {
      failures.push_back({entries[i / per_entry].source_id, rows[i].condition, rows[i].error});
    } else {
      manifest.rows.push_back(std::move(rows[i].fields));
    }
  }
  WriteIfChanged(l.mix_manifest, csv::Render(manifest));
  s.lines.push_back(std::to_string(manifest.rows.size()) + " noisy files");
  WriteFailures(l.mix_failures, std::move(failures), s);
  WriteRunManifest(c, "mix-noise", {{"files", manifest.rows.size()}});
  return s;
}

namespace {

// One audio file under one condition; becomes zero or more blocks.
struct ExtractEntry {
  std::string source_id;
  Label label = Label::kBenign;
  Split split = Split::kTrain;
  Condition condition;
  fs::path wav;
  fs::path mask;  // set for speech / non-speech regions
};

std::vector<ExtractEntry> PlanExtraction(const RunConfig& c, const std::vector<SplitEntry>& splits) {
  const Layout l(c);
  std::vector<ExtractEntry> plan;
  std::map<std::string, const SplitEntry*> by_id;
  for (const auto& e : splits) {
    by_id[e.source_id] = &e;
    for (const auto& region : c.regions) {
      ExtractEntry x{e.source_id, e.label, e.split, {e.attack, region, "clean", "none"}, c.audio_root / e.source_id, {}};
      if (region != "full") x.mask = MaskPath(l, e.source_id);
      plan.push_back(std::move(x));
    }
  }
  if (fs::exists(l.mix_manifest)) {
    const auto t = csv::ReadTable(l.mix_manifest);
    const auto ci = t.Column("source_id"), cn = t.Column("noise_name"), cs = t.Column("snr_db"),
               cp = t.Column("path");
    for (const auto& row : t.rows) {
      auto it = by_id.find(row[ci]);
      if (it == by_id.end()) continue;  // stale row from an older split table
      if (std::find(c.noises.begin(), c.noises.end(), row[cn]) == c.noises.end()) continue;
      if (std::find(c.snrs.begin(), c.snrs.end(), std::stoi(row[cs])) == c.snrs.end()) continue;
      const auto& e = *it->second;
      plan.push_back({e.source_id, e.label, e.split, {e.attack, "full", row[cn], row[cs]}, l.noisy_dir / row[cp], {}});
    }
  }
  return plan;
}

AudioSignal EntrySignal(const ExtractEntry& e, std::string_view wav_bytes, std::string_view mask_text) {
  auto signal = DecodeWav(std::span(reinterpret_cast<const std::uint8_t*>(wav_bytes.data()), wav_bytes.size()),
                          e.wav.string());
  ValidateSignal(signal);
  if (e.condition.region == "full") return signal;
  const auto mask = vad::ParseMask(mask_text, e.mask.string());
  auto [speech, nonspeech] = vad::SplitSpeechNonspeech(signal, mask);
  return e.condition.region == "speech" ? std::move(speech) : std::move(nonspeech);
}

struct EntryState {
  std::string digest;
  std::size_t blocks = 0;
  std::string error;
};

EntryState InspectEntry(const ExtractEntry& e) {
  EntryState st;
  try {
    if (!fs::exists(e.wav)) Fail(ErrorCode::kIo, "missing audio file " + e.wav.string());
    const std::string wav = csv::ReadFile(e.wav);
    std::string mask;
    if (!e.mask.empty()) {
      if (!fs::exists(e.mask)) Fail(ErrorCode::kIo, "missing speech mask " + e.mask.string() + "; run 'vad' first");
      mask = csv::ReadFile(e.mask);
    }
    st.blocks = EntrySignal(e, wav, mask).size() / kBlockSamples;
    Sha256 h;
    h.Update(wav);
    h.Update("|mask|");
    h.Update(mask);
    st.digest = ToHex(h.Finish());
  } catch (const Error& err) {
    st.error = ErrorText(err);
  }
  return st;
}

using GroupKey = std::pair<Split, std::string>;  // split, condition key

}  // namespace

CommandSummary CmdExtract(const RunConfig& c) {
  CommandSummary s{"extract", {}, 0, {}};
  const Layout l(c);
  const auto splits = ReadSplits(c);
  const auto plan = PlanExtraction(c, splits);
  const auto features = c.FeatureList();

  std::vector<EntryState> states(plan.size());
  ParallelFor(plan.size(), c.jobs, [&](std::size_t i) { states[i] = InspectEntry(plan[i]); });

  // A file with any unusable condition is left out of every cache, so the
  // per-condition sets always cover the same utterances. One manifest row
  // per file names the failed conditions and the first error.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> failed;  // id -> (condition, error)
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (!states[i].error.empty()) failed[plan[i].source_id].emplace_back(plan[i].condition.Key(), states[i].error);
  std::vector<Failure> failures;
  for (auto& [id, errs] : failed) {
    std::sort(errs.begin(), errs.end());
    std::string conditions;
    for (const auto& [key, err] : errs) conditions += (conditions.empty() ? "" : ";") + key;
    failures.push_back({id, conditions, errs.front().second});
  }
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (!failed.count(plan[i].source_id)) groups[{plan[i].split, plan[i].condition.Key()}].push_back(i);

  std::vector<BlockRecord> all_records;
  std::size_t written = 0, current = 0;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return plan[a].source_id < plan[b].source_id; });
    const Condition condition = plan[members.front()].condition;
    std::vector<BlockRecord> records;
    for (std::size_t i : members)
      for (std::size_t b = 0; b < states[i].blocks; ++b)
        records.push_back({plan[i].source_id, b, plan[i].label, condition, key.first});
    all_records.insert(all_records.end(), records.begin(), records.end());

    // Stale features: those whose cache digest differs from the inputs'.
    std::vector<FeatureName> stale;
    std::vector<std::string> digests;
    for (auto f : features) {
      Sha256 h;
      h.Update("advdet-features-v1|" + std::string(ToString(f)) + "|" + std::string(ToString(key.first)) + "|" +
               key.second + "\n");
      for (std::size_t i : members)
        h.Update(plan[i].source_id + "|" + std::string(ToString(plan[i].label)) + "|" + states[i].digest + "\n");
      digests.push_back(ToHex(h.Finish()));
      const auto path = dataset::FeatureStore::CachePath(c.cache_dir, f, key.first, condition);
      if (ReadCacheDigest(path) == digests.back() && fs::exists(SidecarPath(path))) {
        ++current;
        digests.pop_back();
      } else {
        stale.push_back(f);
      }
    }
    if (stale.empty()) continue;

    // Per member: features[stale index][block].
    std::vector<std::vector<std::vector<FeatureMatrix>>> computed(members.size());
    std::vector<std::string> errors(members.size());
    ParallelFor(members.size(), c.jobs, [&](std::size_t m) {
      const auto& e = plan[members[m]];
      try {
        const std::string wav = csv::ReadFile(e.wav);
        const std::string mask = e.mask.empty() ? std::string() : csv::ReadFile(e.mask);
        const auto blocks = ChopBlocks(EntrySignal(e, wav, mask), e.label, e.source_id, e.condition);
        computed[m].assign(stale.size(), {});
        for (const auto& block : blocks) {
          const auto power = dsp::PowerSpectra(dsp::FrameBlock(block.samples));
          for (std::size_t k = 0; k < stale.size(); ++k)
            computed[m][k].push_back(Cepstra(power, StandardFilterBank(stale[k]), stale[k]));
        }
      } catch (const Error& err) {
        errors[m] = ErrorText(err);
      }
    });
    for (const auto& err : errors)
      if (!err.empty()) Fail(ErrorCode::kIo, "input changed during extraction: " + err);
    for (std::size_t k = 0; k < stale.size(); ++k) {
      FeatureCache cache;
      cache.feature = stale[k];
      cache.input_digest = digests[k];
      cache.records = records;
      for (std::size_t m = 0; m < members.size(); ++m)
        for (auto& fm : computed[m][k]) cache.features.push_back(std::move(fm));
      WriteFeatureCache(dataset::FeatureStore::CachePath(c.cache_dir, stale[k], key.first, condition), cache);
      ++written;
    }
  }

  // Groups iterate in (split, condition) order and members by source id,
  // so the manifest is already sorted.
  WriteIfChanged(l.blocks, RenderBlockManifest(all_records));
  s.lines.push_back(std::to_string(all_records.size()) + " blocks in " + std::to_string(groups.size()) +
                    " conditions; " + std::to_string(written) + " caches written, " + std::to_string(current) +
                    " up to date");
  WriteFailures(l.extract_failures, std::move(failures), s);
  WriteRunManifest(c, "extract", {{"blocks", all_records.size()}, {"caches", (written + current)}});
  return s;
}

namespace {

experiment::Descriptor LoadDescriptor(const RunConfig& c) {
  auto d = experiment::Descriptor::Load(c.experiment);
  if (!c.seeds.empty()) d.seeds = c.seeds;
  d.train = model::TrainConfig::FromJson(c.train, d.train);
  if (!c.features.empty()) {
    std::vector<FeatureName> keep;
    for (auto f : d.features)
      if (std::find(c.features.begin(), c.features.end(), f) != c.features.end()) keep.push_back(f);
    if (keep.empty()) Fail(ErrorCode::kConfig, "the feature selection leaves no experiment columns");
    d.features = keep;
  }
  for (const auto& id : c.cells) d.Cell(id);
  d.Validate();
  return d;
}

std::vector<BlockRecord> LoadBlocks(const RunConfig& c) {
  const Layout l(c);
  if (!fs::exists(l.blocks)) Fail(ErrorCode::kConfig, "no block manifest at " + l.blocks.string() + "; run 'extract' first");
  return ReadBlockManifest(l.blocks);
}

experiment::RunOptions Options(const RunConfig& c) {
  experiment::RunOptions o;
  o.jobs = c.jobs;
  o.models_dir = Layout(c).models;
  o.only_cells = c.cells;
  return o;
}

json SeedsJson(const experiment::Descriptor& d) { return d.seeds; }

}  // namespace

CommandSummary CmdTrain(const RunConfig& c) {
  CommandSummary s{"train", {}, 0, {}};
  const auto d = LoadDescriptor(c);
  const auto blocks = LoadBlocks(c);
  const dataset::FeatureStore store(c.cache_dir);
  const auto summaries = experiment::TrainModels(d, blocks, store, Options(c));
  std::size_t reused = 0;
  for (const auto& t : summaries) reused += t.reused ? 1 : 0;
  s.lines.push_back(std::to_string(summaries.size()) + " models (" + std::to_string(reused) + " reused)");
  WriteRunManifest(c, "train", {{"descriptor", d.ToJson()}, {"seeds", SeedsJson(d)}, {"models", summaries.size()}});
  return s;
}

CommandSummary CmdEval(const RunConfig& c) {
  CommandSummary s{"eval", {}, 0, {}};
  const auto d = LoadDescriptor(c);
  const auto blocks = LoadBlocks(c);
  const dataset::FeatureStore store(c.cache_dir);
  const auto results = experiment::EvaluateModels(d, blocks, store, Options(c));
  WriteIfChanged(Layout(c).results, experiment::RenderResults(results));
  s.lines.push_back(std::to_string(results.size()) + " results in " + Layout(c).results.string());
  WriteRunManifest(c, "eval", {{"descriptor", d.ToJson()}, {"seeds", SeedsJson(d)}, {"results", results.size()}});
  return s;
}

CommandSummary CmdReport(const RunConfig& c) {
  CommandSummary s{"report", {}, 0, {}};
  const Layout l(c);
  const auto d = LoadDescriptor(c);
  if (!fs::exists(l.results)) Fail(ErrorCode::kConfig, "no results at " + l.results.string() + "; run 'eval' first");
  const auto results = experiment::ParseResults(csv::ReadTable(l.results));
  const auto reports = experiment::BuildReports(d, results);
  WriteIfChanged(l.reports, experiment::RenderReports(reports));
  WriteIfChanged(l.table, experiment::RenderMarkdown(d, reports));
  s.lines.push_back(std::to_string(reports.size()) + " report rows; table in " + l.table.string());
  WriteRunManifest(c, "report", {{"descriptor", d.ToJson()}, {"seeds", SeedsJson(d)}});
  return s;
}

CommandSummary RunCommand(std::string_view command, const RunConfig& c) {
  if (command == "split") return CmdSplit(c);
  if (command == "vad") return CmdVad(c);
  if (command == "mix-noise") return CmdMixNoise(c);
  if (command == "extract") return CmdExtract(c);
  if (command == "train") return CmdTrain(c);
  if (command == "eval") return CmdEval(c);
  if (command == "report") return CmdReport(c);
  Fail(ErrorCode::kConfig, "unknown command '" + std::string(command) + "'");
}

}  // namespace advdet::pipeline
