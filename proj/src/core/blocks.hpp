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
#include <string>
#include <string_view>
#include <vector>

#include "core/audio.hpp"
#include "core/csv.hpp"

namespace advdet {

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };

std::string_view ToString(Split split);
Split ParseSplit(std::string_view text);

// Provenance of one block: which utterance, where in it, and under which
// condition. One row of a block manifest.
struct BlockRecord {
  std::string source_id;
  std::size_t block_index = 0;
  Label label = Label::kBenign;
  Condition condition;
  Split split = Split::kTrain;

  bool operator==(const BlockRecord&) const = default;
};

// Ordering by (source_id, block_index, condition key).
bool ProvenanceLess(const BlockRecord& a, const BlockRecord& b);

csv::Row BlockManifestHeader();
csv::Row ToRow(const BlockRecord& r);
BlockRecord BlockRecordFromRow(const csv::Table& table, const csv::Row& row);

std::vector<BlockRecord> ReadBlockManifest(const std::filesystem::path& path);
std::string RenderBlockManifest(const std::vector<BlockRecord>& records);

}  // namespace advdet
