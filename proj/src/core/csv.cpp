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

#include "core/csv.hpp"

#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace advdet::csv {

std::vector<std::string> SplitLine(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::size_t Table::Column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  Fail(ErrorCode::kParse, "missing column '" + std::string(name) + "'");
}

Table ParseTable(std::string_view text, const std::string& origin) {
  Table t;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.find('"') != std::string_view::npos)
      Fail(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": quoted fields are not supported");
    auto fields = SplitLine(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != t.header.size())
        Fail(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": expected " +
                                    std::to_string(t.header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
      t.rows.push_back(std::move(fields));
    }
    if (end == text.size()) break;
  }
  if (!have_header) Fail(ErrorCode::kParse, origin + ": empty table");
  return t;
}

Table ReadTable(const std::filesystem::path& path) {
  return ParseTable(ReadFile(path), path.string());
}

std::string JoinRow(const Row& row) {
  std::string s;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) s.push_back(',');
    s += row[i];
  }
  return s;
}

std::string Render(const Table& table) {
  std::string s = JoinRow(table.header);
  s.push_back('\n');
  for (const auto& r : table.rows) {
    s += JoinRow(r);
    s.push_back('\n');
  }
  return s;
}

void WriteTable(const std::filesystem::path& path, const Table& table) {
  WriteFileAtomic(path, Render(table));
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace advdet::csv
