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

#include "core/feature_cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace advdet {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'F', 'E', 'A', 'T', '\0'};
constexpr std::size_t kDigestBytes = 32;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  std::string_view Take(std::size_t n) {
    if (pos_ + n > bytes_.size()) Fail(ErrorCode::kParse, origin_ + ": truncated feature cache");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t U(int width) {
    auto s = Take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[static_cast<std::size_t>(i)]);
    return v;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::string DigestFromHex(const std::string& hex) {
  if (hex.size() != 2 * kDigestBytes) Fail(ErrorCode::kInvalidArgument, "input digest must be 64 hex chars");
  std::string raw;
  for (std::size_t i = 0; i < kDigestBytes; ++i)
    raw.push_back(static_cast<char>(std::stoi(hex.substr(2 * i, 2), nullptr, 16)));
  return raw;
}

std::string HexFromRaw(std::string_view raw) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (unsigned char c : raw) {
    s.push_back(kHex[c >> 4]);
    s.push_back(kHex[c & 0xF]);
  }
  return s;
}

}  // namespace

std::filesystem::path SidecarPath(const std::filesystem::path& cache_path) {
  auto p = cache_path;
  p += ".csv";
  return p;
}

std::string EncodeFeatureCache(const FeatureCache& cache) {
  if (cache.records.size() != cache.features.size())
    Fail(ErrorCode::kShapeMismatch, "feature cache has mismatched record and feature counts");
  std::string out(kMagic, sizeof kMagic);
  PutU32(out, kFeatureCacheVersion);
  const auto name = ToString(cache.feature);
  PutU32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  PutU32(out, kFeatureRows);
  PutU32(out, kNumCeps);
  PutU64(out, cache.features.size());
  out += DigestFromHex(cache.input_digest);
  for (const auto& f : cache.features) {
    if (f.coeffs.size() != kFeatureSize || f.name != cache.feature)
      Fail(ErrorCode::kShapeMismatch, "feature matrix does not match the cache");
    for (double v : f.coeffs) PutU64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

FeatureCache DecodeFeatureCache(std::string_view bytes, std::string_view sidecar_csv, const std::string& origin) {
  Reader in(bytes, origin);
  if (in.Take(8) != std::string_view(kMagic, 8)) Fail(ErrorCode::kParse, origin + ": not a feature cache");
  if (in.U(4) != kFeatureCacheVersion) Fail(ErrorCode::kParse, origin + ": unsupported cache version");
  const auto name_len = in.U(4);
  const auto name = ParseFeatureName(in.Take(name_len));
  if (!name) Fail(ErrorCode::kParse, origin + ": unknown feature name");
  if (in.U(4) != kFeatureRows || in.U(4) != kNumCeps) Fail(ErrorCode::kShapeMismatch, origin + ": shape is not 31x20");
  const auto count = in.U(8);
  FeatureCache cache;
  cache.feature = *name;
  cache.input_digest = HexFromRaw(in.Take(kDigestBytes));
  cache.features.reserve(count);
  for (std::uint64_t b = 0; b < count; ++b) {
    FeatureMatrix f;
    f.name = *name;
    f.coeffs.resize(kFeatureSize);
    for (auto& v : f.coeffs) v = std::bit_cast<double>(in.U(8));
    cache.features.push_back(std::move(f));
  }
  if (!in.AtEnd()) Fail(ErrorCode::kParse, origin + ": trailing bytes after feature data");

  const auto table = csv::ParseTable(sidecar_csv, origin + ".csv");
  for (const auto& row : table.rows) cache.records.push_back(BlockRecordFromRow(table, row));
  if (cache.records.size() != count)
    Fail(ErrorCode::kParse, origin + ": sidecar lists " + std::to_string(cache.records.size()) + " blocks, cache has " +
                                std::to_string(count));
  return cache;
}

void WriteFeatureCache(const std::filesystem::path& path, const FeatureCache& cache) {
  csv::WriteFileAtomic(SidecarPath(path), RenderBlockManifest(cache.records));
  csv::WriteFileAtomic(path, EncodeFeatureCache(cache));
}

FeatureCache ReadFeatureCache(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) Fail(ErrorCode::kMissingCache, "no feature cache at " + path.string());
  return DecodeFeatureCache(csv::ReadFile(path), csv::ReadFile(SidecarPath(path)), path.string());
}

std::optional<std::string> ReadCacheDigest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string head(8 + 4 + 4, '\0');
  if (!in.read(head.data(), static_cast<std::streamsize>(head.size()))) return std::nullopt;
  if (head.compare(0, 8, std::string(kMagic, 8)) != 0) return std::nullopt;
  std::uint32_t name_len = 0;
  for (int i = 3; i >= 0; --i) name_len = (name_len << 8) | static_cast<unsigned char>(head[12 + static_cast<std::size_t>(i)]);
  in.seekg(static_cast<std::streamoff>(name_len + 4 + 4 + 8), std::ios::cur);
  std::string raw(kDigestBytes, '\0');
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) return std::nullopt;
  return HexFromRaw(raw);
}

}  // namespace advdet
