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

#include "core/blocks.hpp"

#include <charconv>
#include <tuple>

#include "core/error.hpp"

namespace advdet {

std::string_view ToString(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "validation") return Split::kValidation;
  if (text == "test") return Split::kTest;
  Fail(ErrorCode::kParse, "unknown split '" + std::string(text) + "'");
}

bool ProvenanceLess(const BlockRecord& a, const BlockRecord& b) {
  return std::forward_as_tuple(a.source_id, a.block_index, a.condition.attack, a.condition.region, a.condition.noise,
                               a.condition.snr) < std::forward_as_tuple(b.source_id, b.block_index,
                                                                        b.condition.attack, b.condition.region,
                                                                        b.condition.noise, b.condition.snr);
}

csv::Row BlockManifestHeader() {
  return {"source_id", "block_index", "label", "attack", "region", "noise", "snr", "split"};
}

csv::Row ToRow(const BlockRecord& r) {
  return {r.source_id,         std::to_string(r.block_index), std::string(ToString(r.label)),
          r.condition.attack,  r.condition.region,            r.condition.noise,
          r.condition.snr,     std::string(ToString(r.split))};
}

BlockRecord BlockRecordFromRow(const csv::Table& table, const csv::Row& row) {
  BlockRecord r;
  r.source_id = row[table.Column("source_id")];
  const auto& idx = row[table.Column("block_index")];
  auto res = std::from_chars(idx.data(), idx.data() + idx.size(), r.block_index);
  if (res.ec != std::errc() || res.ptr != idx.data() + idx.size())
    Fail(ErrorCode::kParse, "bad block_index '" + idx + "'");
  r.label = ParseLabel(row[table.Column("label")]);
  r.condition.attack = row[table.Column("attack")];
  r.condition.region = row[table.Column("region")];
  r.condition.noise = row[table.Column("noise")];
  r.condition.snr = row[table.Column("snr")];
  r.split = ParseSplit(row[table.Column("split")]);
  return r;
}

std::vector<BlockRecord> ReadBlockManifest(const std::filesystem::path& path) {
  const auto table = csv::ReadTable(path);
  std::vector<BlockRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(BlockRecordFromRow(table, row));
  return out;
}

std::string RenderBlockManifest(const std::vector<BlockRecord>& records) {
  csv::Table t;
  t.header = BlockManifestHeader();
  for (const auto& r : records) t.rows.push_back(ToRow(r));
  return csv::Render(t);
}

}  // namespace advdet
