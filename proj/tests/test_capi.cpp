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


// Exercises the shared library through its C header only.

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "advdet/advdet.h"

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Dir {
  fs::path path;
  explicit Dir(const std::string& tag) {
    path = fs::temp_directory_path() / ("advdet_capi_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~Dir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::vector<double> Tone(std::size_t n, double hz, double amp) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * kPi * hz * static_cast<double>(i) / 16000.0);
  return x;
}

// Half a second of silence, a second of tone, half a second of silence.
std::vector<double> Burst() {
  std::vector<double> x(32000, 0.0);
  const auto t = Tone(16000, 440.0, 0.5);
  std::copy(t.begin(), t.end(), x.begin() + 8000);
  return x;
}

advdet_signal* Signal(const std::vector<double>& x) {
  advdet_signal* s = nullptr;
  REQUIRE(advdet_signal_create(x.data(), x.size(), 16000, &s) == ADVDET_OK);
  return s;
}

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("status names, exit codes and the last error") {
    CHECK(std::string(advdet_status_name(ADVDET_OK)) == "Ok");
    CHECK(std::string(advdet_status_name(ADVDET_E_DATA_FAILURES)) == "DataFailures");
    CHECK(advdet_exit_code(ADVDET_OK) == 0);
    CHECK(advdet_exit_code(ADVDET_E_CONFIG) == 1);
    CHECK(advdet_exit_code(ADVDET_E_BAD_COEFF_COUNT) == 1);
    CHECK(advdet_exit_code(ADVDET_E_NOT_WAV) == 2);
    CHECK(advdet_exit_code(ADVDET_E_DATA_FAILURES) == 2);
    CHECK(advdet_exit_code(ADVDET_E_INTERNAL) == 3);
    CHECK(std::strlen(advdet_version()) > 0);

    advdet_signal* s = nullptr;
    CHECK(advdet_signal_read_wav("/nonexistent/x.wav", &s) == ADVDET_E_IO);
    CHECK(s == nullptr);
    CHECK(std::strlen(advdet_last_error()) > 0);
    CHECK(advdet_signal_create(nullptr, 10, 16000, &s) == ADVDET_E_INVALID_ARGUMENT);
  }

  TEST_CASE("signals round trip through WAV") {
    Dir dir("wav");
    const auto x = Tone(4000, 1000.0, 0.25);
    advdet_signal* s = Signal(x);
    CHECK(advdet_signal_length(s) == 4000);
    CHECK(advdet_signal_sample_rate(s) == 16000);
    double rms = 0.0;
    REQUIRE(advdet_signal_rms(s, &rms) == ADVDET_OK);
    CHECK(rms == doctest::Approx(0.25 / std::sqrt(2.0)).epsilon(1e-6));

    const std::string path = (dir.path / "tone.wav").string();
    REQUIRE(advdet_signal_write_wav(s, path.c_str()) == ADVDET_OK);
    advdet_signal* back = nullptr;
    REQUIRE(advdet_signal_read_wav(path.c_str(), &back) == ADVDET_OK);
    REQUIRE(advdet_signal_length(back) == 4000);
    const double* y = advdet_signal_samples(back);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(y[i] - x[i]));
    CHECK(worst <= 0.5 / 32767.0 + 1e-12);

    std::ofstream(dir.path / "junk.wav") << "not a wav file at all, definitely not";
    advdet_signal* junk = nullptr;
    CHECK(advdet_signal_read_wav((dir.path / "junk.wav").string().c_str(), &junk) == ADVDET_E_NOT_WAV);
    advdet_signal_free(back);
    advdet_signal_free(s);
  }

  TEST_CASE("feature names and block extraction") {
    advdet_feature f{};
    REQUIRE(advdet_feature_from_name("IMFCC", &f) == ADVDET_OK);
    CHECK(f == ADVDET_IMFCC);
    CHECK(std::string(advdet_feature_name(ADVDET_GFCC)) == "GFCC");
    CHECK(advdet_feature_from_name("PLP", &f) == ADVDET_E_INVALID_ARGUMENT);

    const auto block = Tone(ADVDET_BLOCK_SAMPLES, 700.0, 0.3);
    for (int k = ADVDET_GFCC; k <= ADVDET_MFCC; ++k) {
      std::vector<double> out(ADVDET_FEATURE_SIZE, std::nan(""));
      REQUIRE(advdet_extract_block(block.data(), block.size(), static_cast<advdet_feature>(k), out.data()) ==
              ADVDET_OK);
      for (double v : out) CHECK(std::isfinite(v));
    }
    std::vector<double> out(ADVDET_FEATURE_SIZE);
    CHECK(advdet_extract_block(block.data(), 8000, ADVDET_MFCC, out.data()) == ADVDET_E_SHAPE_MISMATCH);
  }

  TEST_CASE("filter bank inversion") {
    advdet_filterbank* mel = nullptr;
    advdet_filterbank* imel = nullptr;
    advdet_filterbank* back = nullptr;
    REQUIRE(advdet_filterbank_standard(ADVDET_MFCC, &mel) == ADVDET_OK);
    REQUIRE(advdet_filterbank_standard(ADVDET_IMFCC, &imel) == ADVDET_OK);
    CHECK(advdet_filterbank_rows(mel) == 20);
    CHECK(advdet_filterbank_cols(mel) == 257);
    CHECK(advdet_filterbank_equal(mel, imel) == 0);
    REQUIRE(advdet_filterbank_invert(imel, &back) == ADVDET_OK);
    CHECK(advdet_filterbank_equal(mel, back) == 1);
    // Row 0 of the inverse bank is the last row of the original, reversed.
    const double* g = advdet_filterbank_gains(mel);
    const double* h = advdet_filterbank_gains(imel);
    for (std::size_t k = 0; k < 257; ++k) CHECK(h[k] == g[19 * 257 + 256 - k]);
    advdet_filterbank_free(back);
    advdet_filterbank_free(imel);
    advdet_filterbank_free(mel);
  }

  TEST_CASE("speech masks, splitting and mixing") {
    Dir dir("vad");
    advdet_signal* s = Signal(Burst());
    advdet_mask* mask = nullptr;
    REQUIRE(advdet_vad_detect(s, &mask) == ADVDET_OK);
    const std::size_t frames = advdet_mask_frames(mask);
    CHECK(frames == (32000 - 512) / 256 + 1);
    CHECK(advdet_mask_is_speech(mask, 0) == 0);
    CHECK(advdet_mask_is_speech(mask, frames / 2) == 1);

    const std::string mpath = (dir.path / "mask.csv").string();
    REQUIRE(advdet_mask_save(mask, mpath.c_str()) == ADVDET_OK);
    advdet_mask* loaded = nullptr;
    REQUIRE(advdet_mask_load(mpath.c_str(), &loaded) == ADVDET_OK);
    REQUIRE(advdet_mask_frames(loaded) == frames);
    for (std::size_t i = 0; i < frames; ++i) CHECK(advdet_mask_is_speech(loaded, i) == advdet_mask_is_speech(mask, i));

    advdet_signal* speech = nullptr;
    advdet_signal* rest = nullptr;
    REQUIRE(advdet_vad_split(s, mask, &speech, &rest) == ADVDET_OK);
    CHECK(advdet_signal_length(speech) > 14000);
    CHECK(advdet_signal_length(speech) + advdet_signal_length(rest) <= 32000);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 0.1);
    std::vector<double> noise(32000);
    for (double& v : noise) v = gauss(rng);
    for (double snr : {-5.0, 0.0, 5.0, 10.0, 20.0}) {
      advdet_signal* mixed = nullptr;
      double alpha = 0.0;
      REQUIRE(advdet_mix_at_snr(s, mask, noise.data(), noise.size(), snr, &mixed, &alpha) == ADVDET_OK);
      CHECK(alpha > 0.0);
      double measured = 0.0;
      REQUIRE(advdet_measure_snr(s, mask, mixed, &measured) == ADVDET_OK);
      CHECK(measured == doctest::Approx(snr).epsilon(1e-9).scale(1));
      advdet_signal_free(mixed);
    }
    advdet_signal* mixed = nullptr;
    CHECK(advdet_mix_at_snr(s, mask, noise.data(), 100, 0.0, &mixed, nullptr) == ADVDET_E_LENGTH_MISMATCH);

    const std::vector<double> quiet(32000, 0.0);
    advdet_signal* silent = Signal(quiet);
    advdet_mask* none = nullptr;
    CHECK(advdet_vad_detect(silent, &none) == ADVDET_OK);
    CHECK(advdet_mix_at_snr(silent, none, noise.data(), noise.size(), 0.0, &mixed, nullptr) != ADVDET_OK);

    advdet_mask_free(none);
    advdet_signal_free(silent);
    advdet_signal_free(rest);
    advdet_signal_free(speech);
    advdet_mask_free(loaded);
    advdet_mask_free(mask);
    advdet_signal_free(s);
  }

  TEST_CASE("hash split buckets") {
    int bucket = -1, split = -1;
    REQUIRE(advdet_split_bucket("abc", &bucket, &split) == ADVDET_OK);
    CHECK(bucket == 74);
    CHECK(split == 1);
    REQUIRE(advdet_split_bucket("white_utt0", &bucket, &split) == ADVDET_OK);
    CHECK(bucket == 22);
    CHECK(split == 0);
    CHECK(advdet_split_bucket(nullptr, &bucket, &split) == ADVDET_E_INVALID_ARGUMENT);
  }

  TEST_CASE("metrics") {
    const double scores[] = {0.1, 0.4, 0.35, 0.8};
    const int labels[] = {0, 0, 1, 1};
    double auc = 0.0;
    REQUIRE(advdet_rocauc(scores, labels, 4, &auc) == ADVDET_OK);
    CHECK(auc == doctest::Approx(0.75));
    const int one_class[] = {1, 1, 1, 1};
    CHECK(advdet_rocauc(scores, one_class, 4, &auc) == ADVDET_E_SINGLE_CLASS);
    CHECK(advdet_rocauc(scores, labels, 0, &auc) == ADVDET_E_SINGLE_CLASS);

    const double values[] = {0.0, 0.0, 0.0, 0.0, 1.0};
    double mean = 0.0, sd = 0.0;
    REQUIRE(advdet_aggregate(values, 5, &mean, &sd) == ADVDET_OK);
    CHECK(mean == doctest::Approx(0.2));
    CHECK(sd == doctest::Approx(0.4));
  }

  TEST_CASE("a small model trains, scores and survives save and load") {
    Dir dir("model");
    CHECK(advdet_model_param_count() == 139937);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto make = [&](std::size_t n, std::vector<double>& x, std::vector<int>& y) {
      x.resize(n * ADVDET_FEATURE_SIZE);
      y.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(i % 2);
        for (std::size_t k = 0; k < ADVDET_FEATURE_SIZE; ++k)
          x[i * ADVDET_FEATURE_SIZE + k] = gauss(rng) + (y[i] && k % ADVDET_FEATURE_COLS >= 15 ? 1.5 : 0.0);
      }
    };
    std::vector<double> xt, xv, xs;
    std::vector<int> yt, yv, ys;
    make(48, xt, yt);
    make(16, xv, yv);
    make(32, xs, ys);
    advdet_model* m = nullptr;
    const char* cfg = R"({"max_epochs": 4, "patience": 4, "batch_size": 8, "seed": 2})";
    REQUIRE(advdet_model_train(xt.data(), yt.data(), 48, xv.data(), yv.data(), 16, ADVDET_IMFCC, cfg, &m) ==
            ADVDET_OK);
    CHECK(advdet_model_feature(m) == ADVDET_IMFCC);
    std::vector<double> scores(32);
    REQUIRE(advdet_model_score(m, xs.data(), 32, scores.data()) == ADVDET_OK);
    double auc = 0.0;
    REQUIRE(advdet_rocauc(scores.data(), ys.data(), 32, &auc) == ADVDET_OK);
    CHECK(auc > 0.9);

    const std::string path = (dir.path / "m.ckpt").string();
    REQUIRE(advdet_model_save(m, path.c_str()) == ADVDET_OK);
    advdet_model* loaded = nullptr;
    REQUIRE(advdet_model_load(path.c_str(), &loaded) == ADVDET_OK);
    std::vector<double> again(32);
    REQUIRE(advdet_model_score(loaded, xs.data(), 32, again.data()) == ADVDET_OK);
    CHECK(again == scores);

    advdet_model* bad = nullptr;
    CHECK(advdet_model_train(xt.data(), yt.data(), 48, xv.data(), yv.data(), 16, ADVDET_IMFCC, "{not json", &bad) ==
          ADVDET_E_CONFIG);
    CHECK(advdet_model_load((dir.path / "missing.ckpt").string().c_str(), &bad) == ADVDET_E_MISSING_CACHE);
    advdet_model_free(loaded);
    advdet_model_free(m);
  }

  TEST_CASE("pipeline commands report configuration and data failures") {
    Dir dir("run");
    char* summary = nullptr;
    CHECK(advdet_run_command("dance", nullptr, nullptr, &summary) == ADVDET_E_CONFIG);
    advdet_string_free(summary);
    summary = nullptr;
    CHECK(advdet_run_command("split", nullptr, "[1,", nullptr) == ADVDET_E_CONFIG);

    REQUIRE(advdet_make_smoke_corpus(dir.path.string().c_str(), 0) == ADVDET_OK);
    const std::string cfg = (dir.path / "config.json").string();
    // Truncate one recording to its first 40 bytes.
    fs::path victim;
    for (const auto& e : fs::recursive_directory_iterator(dir.path / "audio"))
      if (e.path().extension() == ".wav") {
        victim = e.path();
        break;
      }
    REQUIRE(!victim.empty());
    fs::resize_file(victim, 40);

    REQUIRE(advdet_run_command("split", cfg.c_str(), nullptr, &summary) == ADVDET_OK);
    REQUIRE(summary != nullptr);
    CHECK(std::string(summary).find("split") != std::string::npos);
    advdet_string_free(summary);
    summary = nullptr;
    const advdet_status st = advdet_run_command("vad", cfg.c_str(), R"({"jobs": 1})", &summary);
    CHECK(st == ADVDET_E_DATA_FAILURES);
    CHECK(advdet_exit_code(st) == 2);
    CHECK(std::string(advdet_last_error()).find("DataFailures") != std::string::npos);
    advdet_string_free(summary);
  }
}
