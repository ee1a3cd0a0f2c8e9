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
#include <optional>
#include <string>
#include <vector>

#include "core/blocks.hpp"
#include "core/filterbank.hpp"

namespace advdet {

// Binary feature cache, all integers and floats little-endian:
//   8  bytes  magic "ADVFEAT\0"
//   u32       format version (1)
//   u32 + n   feature name (ASCII)
//   u32, u32  rows (31), cols (20)
//   u64       block count
//   32 bytes  SHA-256 of the inputs the cache was built from
//   count * rows * cols float64, row-major per block
// Block provenance lives in a CSV sidecar next to it (<file>.csv).
inline constexpr std::uint32_t kFeatureCacheVersion = 1;

struct FeatureCache {
  FeatureName feature = FeatureName::kMfcc;
  std::string input_digest;  // 64 hex chars
  std::vector<BlockRecord> records;
  std::vector<FeatureMatrix> features;
};

std::filesystem::path SidecarPath(const std::filesystem::path& cache_path);

std::string EncodeFeatureCache(const FeatureCache& cache);
FeatureCache DecodeFeatureCache(std::string_view bytes, std::string_view sidecar_csv, const std::string& origin);

// Writes the binary file and its sidecar, each atomically.
void WriteFeatureCache(const std::filesystem::path& path, const FeatureCache& cache);
FeatureCache ReadFeatureCache(const std::filesystem::path& path);

// Digest stored in an existing cache header, or nullopt if unreadable.
std::optional<std::string> ReadCacheDigest(const std::filesystem::path& path);

}  // namespace advdet
