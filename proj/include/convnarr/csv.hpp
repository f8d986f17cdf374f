/*******************************************************************************
 * Copyright 2026 The convnarr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *******************************************************************************/
#ifndef CONVNARR_CSV_HPP
#define CONVNARR_CSV_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace convnarr::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number of the row's first line
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

// RFC 4180 reader: comma separated, double-quoted fields may hold commas,
// quotes ("") and newlines. A UTF-8 BOM and CRLF line endings are accepted;
// blank lines are skipped.
// Throws std::runtime_error naming the line on an unterminated quote.
Table parse(std::string_view text, bool has_header = true);
Table read_file(const std::filesystem::path& path, bool has_header = true);

std::string quote(std::string_view field);
std::string format_row(const std::vector<std::string>& fields);

// Shortest round-trippable representation.
std::string format_double(double v);

}  // namespace convnarr::csv

#endif  // CONVNARR_CSV_HPP
