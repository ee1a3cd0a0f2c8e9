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

#include "advdet/advdet.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "core/audio.hpp"
#include "core/cnn.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/filterbank.hpp"
#include "core/metrics.hpp"
#include "core/noise.hpp"
#include "core/pipeline.hpp"
#include "core/smoke_corpus.hpp"
#include "core/vad.hpp"

struct advdet_signal {
  advdet::AudioSignal signal;
};
struct advdet_filterbank {
  advdet::FilterBankMatrix fb;
};
struct advdet_mask {
  advdet::vad::SpeechMask mask;
};
struct advdet_model {
  advdet::model::CnnDetector model;
  advdet::model::TrainConfig config;
};

namespace {

using advdet::ErrorCode;
using advdet::Fail;

static_assert(static_cast<int>(ErrorCode::kInvalidArgument) == ADVDET_E_INVALID_ARGUMENT);
static_assert(static_cast<int>(ErrorCode::kMissingCache) == ADVDET_E_MISSING_CACHE);
static_assert(static_cast<int>(ErrorCode::kInternal) == ADVDET_E_INTERNAL);
static_assert(static_cast<int>(ErrorCode::kDataFailures) == ADVDET_E_DATA_FAILURES);

thread_local std::string g_last_error;

advdet_status SetError(advdet_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Exception barrier: nothing may unwind across the C boundary.
template <typename Fn>
advdet_status Guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return ADVDET_OK;
  } catch (const advdet::Error& e) {
    return SetError(static_cast<advdet_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return SetError(ADVDET_E_CONFIG, std::string("ConfigError: ") + e.what());
  } catch (const std::bad_alloc&) {
    return SetError(ADVDET_E_INTERNAL, "InternalError: out of memory");
  } catch (const std::exception& e) {
    return SetError(ADVDET_E_INTERNAL, std::string("InternalError: ") + e.what());
  } catch (...) {
    return SetError(ADVDET_E_INTERNAL, "InternalError: unknown exception");
  }
}

void Require(bool ok, const char* what) {
  if (!ok) Fail(ErrorCode::kInvalidArgument, what);
}

advdet::FeatureName ToInternal(advdet_feature f) {
  const int i = static_cast<int>(f);
  Require(i >= 0 && i < static_cast<int>(advdet::kAllFeatures.size()), "unknown feature");
  return advdet::kAllFeatures[static_cast<std::size_t>(i)];
}

advdet_feature ToC(advdet::FeatureName f) {
  for (std::size_t i = 0; i < advdet::kAllFeatures.size(); ++i)
    if (advdet::kAllFeatures[i] == f) return static_cast<advdet_feature>(i);
  return ADVDET_MFCC;
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

advdet::dataset::LabeledFeatureSet MakeSet(const double* features, const int* labels, std::size_t n,
                                           advdet::FeatureName name) {
  Require(n == 0 || (features && labels), "null feature or label array");
  advdet::dataset::LabeledFeatureSet set;
  set.items.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& item = set.items[i];
    item.features.name = name;
    item.features.coeffs.assign(features + i * advdet::kFeatureSize, features + (i + 1) * advdet::kFeatureSize);
    Require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
    item.label = labels[i];
    item.provenance.source_id = "item" + std::to_string(i);
  }
  return set;
}

}  // namespace

extern "C" {

const char* advdet_version(void) { return advdet::pipeline::kVersion.data(); }

const char* advdet_last_error(void) { return g_last_error.c_str(); }

const char* advdet_status_name(advdet_status status) {
  if (status == ADVDET_OK) return "Ok";
  return advdet::ErrorCodeName(static_cast<ErrorCode>(status));
}

int advdet_exit_code(advdet_status status) {
  switch (status) {
    case ADVDET_OK:
      return 0;
    case ADVDET_E_INVALID_ARGUMENT:
    case ADVDET_E_BAD_COEFF_COUNT:
    case ADVDET_E_BAD_SPEC:
    case ADVDET_E_CONFIG:
      return 1;
    case ADVDET_E_INTERNAL:
      return 3;
    default:
      return 2;
  }
}

void advdet_string_free(char* s) { std::free(s); }

advdet_status advdet_signal_create(const double* samples, size_t n, uint32_t sample_rate, advdet_signal** out) {
  return Guard([&] {
    Require(out && (samples || n == 0), "null argument");
    auto s = std::make_unique<advdet_signal>();
    s->signal.samples.assign(samples, samples + n);
    s->signal.sample_rate = sample_rate;
    advdet::ValidateSignal(s->signal);
    *out = s.release();
  });
}

advdet_status advdet_signal_read_wav(const char* path, advdet_signal** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    auto s = std::make_unique<advdet_signal>();
    s->signal = advdet::ReadWav(path);
    *out = s.release();
  });
}

advdet_status advdet_signal_write_wav(const advdet_signal* s, const char* path) {
  return Guard([&] {
    Require(s && path, "null argument");
    advdet::WriteWav(s->signal, path);
  });
}

size_t advdet_signal_length(const advdet_signal* s) { return s ? s->signal.size() : 0; }
uint32_t advdet_signal_sample_rate(const advdet_signal* s) { return s ? s->signal.sample_rate : 0; }
const double* advdet_signal_samples(const advdet_signal* s) { return s ? s->signal.samples.data() : nullptr; }

advdet_status advdet_signal_rms(const advdet_signal* s, double* out) {
  return Guard([&] {
    Require(s && out, "null argument");
    *out = advdet::Rms(s->signal.samples);
  });
}

void advdet_signal_free(advdet_signal* s) { delete s; }

advdet_status advdet_feature_from_name(const char* name, advdet_feature* out) {
  return Guard([&] {
    Require(name && out, "null argument");
    const auto f = advdet::ParseFeatureName(name);
    if (!f) Fail(ErrorCode::kInvalidArgument, std::string("unknown feature '") + name + "'");
    *out = ToC(*f);
  });
}

const char* advdet_feature_name(advdet_feature feature) {
  const int i = static_cast<int>(feature);
  if (i < 0 || i >= static_cast<int>(advdet::kAllFeatures.size())) return "";
  return advdet::ToString(advdet::kAllFeatures[static_cast<std::size_t>(i)]).data();
}

advdet_status advdet_extract_block(const double* block, size_t n, advdet_feature feature, double* out) {
  return Guard([&] {
    Require(block && out, "null argument");
    const auto fm = advdet::ExtractFeatures(std::span(block, n), ToInternal(feature));
    std::copy(fm.coeffs.begin(), fm.coeffs.end(), out);
  });
}

advdet_status advdet_filterbank_standard(advdet_feature feature, advdet_filterbank** out) {
  return Guard([&] {
    Require(out, "null argument");
    *out = new advdet_filterbank{advdet::StandardFilterBank(ToInternal(feature))};
  });
}

advdet_status advdet_filterbank_invert(const advdet_filterbank* fb, advdet_filterbank** out) {
  return Guard([&] {
    Require(fb && out, "null argument");
    *out = new advdet_filterbank{advdet::InvertFilterBank(fb->fb)};
  });
}

size_t advdet_filterbank_rows(const advdet_filterbank* fb) { return fb ? fb->fb.num_filters() : 0; }
size_t advdet_filterbank_cols(const advdet_filterbank* fb) { return fb ? fb->fb.num_bins() : 0; }
const double* advdet_filterbank_gains(const advdet_filterbank* fb) { return fb ? fb->fb.gains().data() : nullptr; }
int advdet_filterbank_equal(const advdet_filterbank* a, const advdet_filterbank* b) {
  return a && b && a->fb == b->fb ? 1 : 0;
}
void advdet_filterbank_free(advdet_filterbank* fb) { delete fb; }

advdet_status advdet_vad_detect(const advdet_signal* s, advdet_mask** out) {
  return Guard([&] {
    Require(s && out, "null argument");
    *out = new advdet_mask{advdet::vad::DetectSpeech(s->signal)};
  });
}

advdet_status advdet_vad_split(const advdet_signal* s, const advdet_mask* mask, advdet_signal** speech,
                               advdet_signal** nonspeech) {
  return Guard([&] {
    Require(s && mask && speech && nonspeech, "null argument");
    auto [sp, ns] = advdet::vad::SplitSpeechNonspeech(s->signal, mask->mask);
    auto a = std::make_unique<advdet_signal>(advdet_signal{std::move(sp)});
    auto b = std::make_unique<advdet_signal>(advdet_signal{std::move(ns)});
    *speech = a.release();
    *nonspeech = b.release();
  });
}

advdet_status advdet_mask_load(const char* path, advdet_mask** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    *out = new advdet_mask{advdet::vad::LoadMask(path)};
  });
}

advdet_status advdet_mask_save(const advdet_mask* mask, const char* path) {
  return Guard([&] {
    Require(mask && path, "null argument");
    advdet::vad::SaveMask(mask->mask, path);
  });
}

size_t advdet_mask_frames(const advdet_mask* mask) { return mask ? mask->mask.size() : 0; }
int advdet_mask_is_speech(const advdet_mask* mask, size_t frame) {
  return mask && frame < mask->mask.size() && mask->mask.IsSpeech(frame) ? 1 : 0;
}
void advdet_mask_free(advdet_mask* mask) { delete mask; }

advdet_status advdet_mix_at_snr(const advdet_signal* s, const advdet_mask* mask, const double* noise, size_t n,
                                double snr_db, advdet_signal** out, double* alpha) {
  return Guard([&] {
    Require(s && mask && noise && out, "null argument");
    auto r = advdet::noise::MixAtSnr(s->signal, mask->mask, std::span(noise, n), snr_db);
    if (alpha) *alpha = r.alpha;
    *out = new advdet_signal{std::move(r.mixed)};
  });
}

advdet_status advdet_measure_snr(const advdet_signal* clean, const advdet_mask* mask, const advdet_signal* mixed,
                                 double* out_db) {
  return Guard([&] {
    Require(clean && mask && mixed && out_db, "null argument");
    *out_db = advdet::noise::MeasureSpeechSnrDb(clean->signal, mask->mask, mixed->signal);
  });
}

advdet_status advdet_split_bucket(const char* source_id, int* bucket, int* split) {
  return Guard([&] {
    Require(source_id, "null argument");
    if (bucket) *bucket = advdet::dataset::HashBucket(source_id);
    if (split) *split = static_cast<int>(advdet::dataset::SplitForId(source_id));
  });
}

advdet_status advdet_rocauc(const double* scores, const int* labels, size_t n, double* out) {
  return Guard([&] {
    Require(out && (n == 0 || (scores && labels)), "null argument");
    *out = advdet::metrics::Rocauc(std::span(scores, n), std::span(labels, n));
  });
}

advdet_status advdet_aggregate(const double* values, size_t n, double* mean, double* stddev) {
  return Guard([&] {
    Require(mean && stddev && (n == 0 || values), "null argument");
    const auto a = advdet::metrics::AggregateValues(std::span(values, n));
    *mean = a.mean;
    *stddev = a.stddev;
  });
}

size_t advdet_model_param_count(void) { return advdet::model::kLayout.total; }

advdet_status advdet_model_train(const double* features, const int* labels, size_t n, const double* val_features,
                                 const int* val_labels, size_t n_val, advdet_feature feature,
                                 const char* train_config_json, advdet_model** out) {
  return Guard([&] {
    Require(out, "null argument");
    advdet::model::TrainConfig config;
    if (train_config_json) config = advdet::model::TrainConfig::FromJson(nlohmann::json::parse(train_config_json));
    const auto name = ToInternal(feature);
    const auto train = MakeSet(features, labels, n, name);
    const auto val = MakeSet(val_features, val_labels, n_val, name);
    auto result = advdet::model::Train(train, val, config);
    *out = new advdet_model{std::move(result.model), config};
  });
}

advdet_status advdet_model_load(const char* path, advdet_model** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    auto ck = advdet::model::LoadCheckpoint(path);
    *out = new advdet_model{std::move(ck.model), ck.config};
  });
}

advdet_status advdet_model_save(const advdet_model* m, const char* path) {
  return Guard([&] {
    Require(m && path, "null argument");
    advdet::model::SaveCheckpoint(path, m->model, m->config);
  });
}

advdet_status advdet_model_score(const advdet_model* m, const double* features, size_t n, double* scores) {
  return Guard([&] {
    Require(m && (n == 0 || (features && scores)), "null argument");
    advdet::model::Workspace ws;
    std::vector<double> input(advdet::kFeatureSize);
    for (std::size_t i = 0; i < n; ++i) {
      m->model.standardizer().ApplyInto(std::span(features + i * advdet::kFeatureSize, advdet::kFeatureSize), input);
      scores[i] = m->model.Probability(input, ws);
    }
  });
}

advdet_feature advdet_model_feature(const advdet_model* m) { return m ? ToC(m->model.feature()) : ADVDET_MFCC; }

void advdet_model_free(advdet_model* m) { delete m; }

advdet_status advdet_run_command(const char* command, const char* config_path, const char* overrides_json,
                                 char** summary) {
  advdet::pipeline::CommandSummary result;
  const advdet_status st = Guard([&] {
    Require(command != nullptr, "null command");
    nlohmann::json overrides = nlohmann::json::object();
    if (overrides_json && *overrides_json) {
      try {
        overrides = nlohmann::json::parse(overrides_json);
      } catch (const nlohmann::json::exception& e) {
        Fail(ErrorCode::kConfig, std::string("bad overrides: ") + e.what());
      }
    }
    const auto config = advdet::pipeline::RunConfig::Load(config_path ? config_path : "", overrides);
    result = advdet::pipeline::RunCommand(command, config);
  });
  if (summary) {
    std::string text;
    for (const auto& line : result.lines) text += result.command + ": " + line + "\n";
    *summary = CopyString(text);
  }
  if (st != ADVDET_OK) return st;
  if (result.failures > 0)
    return SetError(ADVDET_E_DATA_FAILURES, "DataFailures: " + std::to_string(result.failures) +
                                                " input(s) failed; see " + result.failure_manifest.string());
  return ADVDET_OK;
}

advdet_status advdet_make_smoke_corpus(const char* dir, uint64_t seed) {
  return Guard([&] {
    Require(dir, "null argument");
    advdet::synth::MakeSmokeCorpus(dir, seed);
  });
}

}  // extern "C"
