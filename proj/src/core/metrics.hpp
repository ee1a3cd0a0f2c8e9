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

#include <cstddef>
#include <span>
#include <vector>

namespace advdet::metrics {

// Area under the ROC curve, ties counted as half. Score and label spans must
// have equal length and contain both classes (label 1 is positive).
double Rocauc(std::span<const double> scores, std::span<const int> labels);

struct Aggregate {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

Aggregate AggregateValues(std::span<const double> values);

}  // namespace advdet::metrics
