// Copyright 2026 The gradepred Authors
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

#include <string>
#include <string_view>
#include <vector>

namespace gradepred {

std::vector<std::string> split(std::string_view line, char delim);
std::string_view trim(std::string_view s);

// strtod/strtoll wrappers that reject trailing garbage; `what` names the
// value in the error message.
double parse_double(std::string_view token, std::string_view what);
long long parse_int(std::string_view token, std::string_view what);

std::string read_file(const std::string& path);            // throws if unreadable
void write_file(const std::string& path, std::string_view content);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

}  // namespace gradepred
