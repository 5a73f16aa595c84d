/* Copyright 2026 The SmokeyNet Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace smokeynet::csv {

// Minimal delimited-text table: one header line, comma separated, no quoting.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header; throws kDataError when absent.
  size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

std::vector<std::string> split(std::string_view line, char delimiter = ',');
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view source = "<memory>");
void write(const std::filesystem::path& path, const Table& table);
std::string to_string(const Table& table);

double parse_double(std::string_view text, std::string_view what);
long parse_long(std::string_view text, std::string_view what);
// Shortest text that parses back to the identical double.
std::string format_double(double value);

}  // namespace smokeynet::csv
