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

#ifndef ADVDET_ADVDET_H_
#define ADVDET_ADVDET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ADVDET_BUILDING_LIBRARY)
#define ADVDET_API __attribute__((visibility("default")))
#else
#define ADVDET_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every fallible call returns one; on failure the message is
   available from advdet_last_error() on the same thread. */
typedef enum advdet_status {
  ADVDET_OK = 0,
  ADVDET_E_INVALID_ARGUMENT = 1,
  ADVDET_E_IO = 2,
  ADVDET_E_NOT_WAV = 3,
  ADVDET_E_UNSUPPORTED_ENCODING = 4,
  ADVDET_E_UNSUPPORTED_CHANNELS = 5,
  ADVDET_E_UNSUPPORTED_RATE = 6,
  ADVDET_E_EMPTY_INPUT = 7,
  ADVDET_E_BAD_COEFF_COUNT = 8,
  ADVDET_E_BAD_SPEC = 9,
  ADVDET_E_SHAPE_MISMATCH = 10,
  ADVDET_E_TOO_SHORT = 11,
  ADVDET_E_GEOMETRY_MISMATCH = 12,
  ADVDET_E_PARSE = 13,
  ADVDET_E_NO_SPEECH = 14,
  ADVDET_E_SILENT_SPEECH = 15,
  ADVDET_E_LENGTH_MISMATCH = 16,
  ADVDET_E_DUPLICATE_ID = 17,
  ADVDET_E_MISSING_CACHE = 18,
  ADVDET_E_EMPTY_SET = 19,
  ADVDET_E_SINGLE_CLASS = 20,
  ADVDET_E_CONFIG = 21,
  ADVDET_E_INTERNAL = 22,
  ADVDET_E_DATA_FAILURES = 23
} advdet_status;

/* Feature variants, in result-table column order. */
typedef enum advdet_feature {
  ADVDET_GFCC = 0,
  ADVDET_IGFCC = 1,
  ADVDET_IMFCC = 2,
  ADVDET_LFCC = 3,
  ADVDET_MFCC = 4
} advdet_feature;

#define ADVDET_SAMPLE_RATE 16000
#define ADVDET_BLOCK_SAMPLES 8192
#define ADVDET_FEATURE_ROWS 31
#define ADVDET_FEATURE_COLS 20
#define ADVDET_FEATURE_SIZE (ADVDET_FEATURE_ROWS * ADVDET_FEATURE_COLS)

typedef struct advdet_signal advdet_signal;
typedef struct advdet_filterbank advdet_filterbank;
typedef struct advdet_mask advdet_mask;
typedef struct advdet_model advdet_model;

ADVDET_API const char* advdet_version(void);
ADVDET_API const char* advdet_last_error(void);
ADVDET_API const char* advdet_status_name(advdet_status status);
/* Process exit code for a status: 0 ok, 1 usage/config, 2 data, 3 internal. */
ADVDET_API int advdet_exit_code(advdet_status status);
ADVDET_API void advdet_string_free(char* s);

/* Signals: mono samples in [-1, 1]. */
ADVDET_API advdet_status advdet_signal_create(const double* samples, size_t n, uint32_t sample_rate,
                                              advdet_signal** out);
ADVDET_API advdet_status advdet_signal_read_wav(const char* path, advdet_signal** out);
ADVDET_API advdet_status advdet_signal_write_wav(const advdet_signal* s, const char* path);
ADVDET_API size_t advdet_signal_length(const advdet_signal* s);
ADVDET_API uint32_t advdet_signal_sample_rate(const advdet_signal* s);
ADVDET_API const double* advdet_signal_samples(const advdet_signal* s);
ADVDET_API advdet_status advdet_signal_rms(const advdet_signal* s, double* out);
ADVDET_API void advdet_signal_free(advdet_signal* s);

/* Features. `out` receives ADVDET_FEATURE_SIZE values, frame-major. */
ADVDET_API advdet_status advdet_feature_from_name(const char* name, advdet_feature* out);
ADVDET_API const char* advdet_feature_name(advdet_feature feature);
ADVDET_API advdet_status advdet_extract_block(const double* block, size_t n, advdet_feature feature, double* out);

/* Filter banks: 20 x 257 gain matrices, row-major. */
ADVDET_API advdet_status advdet_filterbank_standard(advdet_feature feature, advdet_filterbank** out);
ADVDET_API advdet_status advdet_filterbank_invert(const advdet_filterbank* fb, advdet_filterbank** out);
ADVDET_API size_t advdet_filterbank_rows(const advdet_filterbank* fb);
ADVDET_API size_t advdet_filterbank_cols(const advdet_filterbank* fb);
ADVDET_API const double* advdet_filterbank_gains(const advdet_filterbank* fb);
ADVDET_API int advdet_filterbank_equal(const advdet_filterbank* a, const advdet_filterbank* b);
ADVDET_API void advdet_filterbank_free(advdet_filterbank* fb);

/* Voice activity: one flag per 512-sample frame at 256-sample shift. */
ADVDET_API advdet_status advdet_vad_detect(const advdet_signal* s, advdet_mask** out);
ADVDET_API advdet_status advdet_vad_split(const advdet_signal* s, const advdet_mask* mask, advdet_signal** speech,
                                          advdet_signal** nonspeech);
ADVDET_API advdet_status advdet_mask_load(const char* path, advdet_mask** out);
ADVDET_API advdet_status advdet_mask_save(const advdet_mask* mask, const char* path);
ADVDET_API size_t advdet_mask_frames(const advdet_mask* mask);
ADVDET_API int advdet_mask_is_speech(const advdet_mask* mask, size_t frame);
ADVDET_API void advdet_mask_free(advdet_mask* mask);

/* Noise mixing at a speech-part SNR. `alpha` (optional) receives the noise
   scale. `noise` must be as long as the signal. */
ADVDET_API advdet_status advdet_mix_at_snr(const advdet_signal* s, const advdet_mask* mask, const double* noise,
                                           size_t n, double snr_db, advdet_signal** out, double* alpha);
ADVDET_API advdet_status advdet_measure_snr(const advdet_signal* clean, const advdet_mask* mask,
                                            const advdet_signal* mixed, double* out_db);

/* Hash split: bucket in [0, 100); split 0 train, 1 validation, 2 test. */
ADVDET_API advdet_status advdet_split_bucket(const char* source_id, int* bucket, int* split);

/* Metrics. */
ADVDET_API advdet_status advdet_rocauc(const double* scores, const int* labels, size_t n, double* out);
ADVDET_API advdet_status advdet_aggregate(const double* values, size_t n, double* mean, double* stddev);

/* Detector models. Feature arrays hold n * ADVDET_FEATURE_SIZE raw
   (unstandardised) coefficients; labels are 0 benign, 1 adversarial.
   `train_config_json` may be NULL or a JSON object overriding the
   defaults (learning_rate, batch_size, max_epochs, patience, seed, ...). */
ADVDET_API size_t advdet_model_param_count(void);
ADVDET_API advdet_status advdet_model_train(const double* features, const int* labels, size_t n,
                                            const double* val_features, const int* val_labels, size_t n_val,
                                            advdet_feature feature, const char* train_config_json,
                                            advdet_model** out);
ADVDET_API advdet_status advdet_model_load(const char* path, advdet_model** out);
ADVDET_API advdet_status advdet_model_save(const advdet_model* m, const char* path);
ADVDET_API advdet_status advdet_model_score(const advdet_model* m, const double* features, size_t n,
                                            double* scores);
ADVDET_API advdet_feature advdet_model_feature(const advdet_model* m);
ADVDET_API void advdet_model_free(advdet_model* m);

/* Batch pipeline. `command` is one of split, vad, mix-noise, extract,
   train, eval, report. `config_path` may be NULL; `overrides_json` may be
   NULL or a JSON object whose keys replace those of the config file.
   When `summary` is non-NULL it receives a newline-separated progress
   summary to be released with advdet_string_free. Per-file failures
   return ADVDET_E_DATA_FAILURES after the remaining files are processed. */
ADVDET_API advdet_status advdet_run_command(const char* command, const char* config_path,
                                            const char* overrides_json, char** summary);

/* Writes the bundled 20-utterance synthetic corpus with its config. */
ADVDET_API advdet_status advdet_make_smoke_corpus(const char* dir, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif  /* ADVDET_ADVDET_H_ */
