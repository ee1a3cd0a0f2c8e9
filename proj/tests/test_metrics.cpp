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

#include <cmath>
#include <vector>

#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "oracles/transforms.hpp"
#include "test_util.hpp"

using namespace advdet;

TEST_SUITE("metrics") {
  TEST_CASE("ROC AUC on small cases") {
    CHECK(metrics::Rocauc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(metrics::Rocauc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{0, 0, 1, 1}) == 0.0);
    CHECK(metrics::Rocauc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{0, 1, 0, 1}) == 0.5);
    // One swapped pair out of four.
    CHECK(metrics::Rocauc(std::vector<double>{0.1, 0.6, 0.5, 0.9}, std::vector<int>{0, 0, 1, 1}) == 0.75);
  }

  TEST_CASE("ROC AUC equals the pairwise count, ties included") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> s;
      std::vector<int> y;
      for (int i = 0; i < 200; ++i) {
        y.push_back(static_cast<int>(rng.Below(2)));
        // Coarse scores force many ties.
        s.push_back(std::round(rng.Uniform() * 10 + y.back() * 3) / 10);
      }
      CHECK(metrics::Rocauc(s, y) == doctest::Approx(oracle::PairwiseAuc(s, y)).epsilon(1e-14));
    }
  }

  TEST_CASE("ROC AUC is invariant to monotone transforms and flips under negation") {
    Rng rng(12);
    std::vector<double> s, t, neg;
    std::vector<int> y;
    for (int i = 0; i < 300; ++i) {
      y.push_back(i % 3 == 0);
      s.push_back(rng.Normal() + y.back());
      t.push_back(std::exp(3 * s.back()));
      neg.push_back(-s.back());
    }
    const double a = metrics::Rocauc(s, y);
    CHECK(metrics::Rocauc(t, y) == a);
    CHECK(metrics::Rocauc(neg, y) == doctest::Approx(1 - a).epsilon(1e-14));
  }

  TEST_CASE("ROC AUC errors") {
    CHECK_CODE(metrics::Rocauc(std::vector<double>{0.1}, std::vector<int>{0, 1}), ErrorCode::kLengthMismatch);
    CHECK_CODE(metrics::Rocauc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ErrorCode::kSingleClass);
    CHECK_CODE(metrics::Rocauc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 2}), ErrorCode::kInvalidArgument);
    CHECK_CODE(metrics::Rocauc(std::vector<double>{NAN, 0.2}, std::vector<int>{0, 1}), ErrorCode::kInvalidArgument);
  }

  TEST_CASE("aggregate uses the population standard deviation") {
    const auto a = metrics::AggregateValues(std::vector<double>{0, 0, 0, 0, 1});
    CHECK(a.count == 5);
    CHECK(a.mean == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(a.stddev == doctest::Approx(0.4).epsilon(1e-15));
    const auto one = metrics::AggregateValues(std::vector<double>{0.7});
    CHECK(one.stddev == 0.0);
    CHECK_CODE(metrics::AggregateValues(std::vector<double>{}), ErrorCode::kEmptyInput);
  }
}
