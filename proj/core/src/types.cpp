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

#include "gradepred/types.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace gradepred {

CalTerm make_cal_term(int year, Season season) {
  return static_cast<CalTerm>(year * 3 + static_cast<int>(season));
}

CalTerm parse_cal_term(const std::string& token) {
  if (token.size() != 6) {
    throw std::runtime_error("bad term token '" + token + "' (want YYYYSP|YYYYSU|YYYYFA)");
  }
  for (int i = 0; i < 4; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(token[i]))) {
      throw std::runtime_error("bad term token '" + token + "' (year must be 4 digits)");
    }
  }
  const int year = std::stoi(token.substr(0, 4));
  const std::string season = token.substr(4);
  if (season == "SP") return make_cal_term(year, Season::spring);
  if (season == "SU") return make_cal_term(year, Season::summer);
  if (season == "FA") return make_cal_term(year, Season::fall);
  throw std::runtime_error("bad term token '" + token + "' (season must be SP, SU or FA)");
}

std::string format_cal_term(CalTerm term) {
  const int year = term / 3;
  static const char* kSeason[] = {"SP", "SU", "FA"};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d%s", year, kSeason[term % 3]);
  return buf;
}

IdTable IdTable::from_ids(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  IdTable table;
  table.ordered_ = std::move(ids);
  table.index_.reserve(table.ordered_.size());
  for (std::size_t i = 0; i < table.ordered_.size(); ++i) {
    table.index_.emplace(table.ordered_[i], static_cast<std::int32_t>(i));
  }
  return table;
}

std::int32_t IdTable::handle(const std::string& external_id) const {
  auto it = index_.find(external_id);
  if (it == index_.end()) {
    throw std::runtime_error("unknown id '" + external_id + "'");
  }
  return it->second;
}

bool IdTable::contains(const std::string& external_id) const {
  return index_.find(external_id) != index_.end();
}

const std::string& IdTable::external(std::int32_t handle) const {
  if (handle < 0 || handle >= size()) {
    throw std::runtime_error("id handle " + std::to_string(handle) + " out of range");
  }
  return ordered_[static_cast<std::size_t>(handle)];
}

}  // namespace gradepred
