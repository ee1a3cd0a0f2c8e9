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

namespace advdet::csv {

// Minimal comma-separated reader/writer. Fields never contain commas,
// quotes or newlines in any file this project writes, and readers reject
// quoted input rather than guessing.
using Row = std::vector<std::string>;

std::vector<std::string> SplitLine(std::string_view line);

struct Table {
  Row header;
  std::vector<Row> rows;

  // Index of a header column; throws ParseError when absent.
  std::size_t Column(std::string_view name) const;
};

// Reads a file with a header line. Blank lines are skipped.
Table ReadTable(const std::filesystem::path& path);
Table ParseTable(std::string_view text, const std::string& origin);

std::string JoinRow(const Row& row);
std::string Render(const Table& table);

// Writes through a temporary file and renames, so readers never observe a
// partially written table.
void WriteTable(const std::filesystem::path& path, const Table& table);

// Atomic text write shared by the other file formats.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);
std::string ReadFile(const std::filesystem::path& path);

}  // namespace advdet::csv
