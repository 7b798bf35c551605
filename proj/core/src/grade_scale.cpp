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

#include "gradepred/grade_scale.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "gradepred/text.hpp"

namespace gradepred {

namespace {
// Distances this close count as a tie, which goes to the higher grade.
constexpr double kTieEps = 1e-9;
}  // namespace

GradeScale::GradeScale(std::vector<ScaleEntry> entries) : entries_(std::move(entries)) {
  if (entries_.size() < 2) {
    throw std::runtime_error("grade scale needs at least two entries");
  }
  int zeros = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const ScaleEntry& e = entries_[i];
    if (!(e.points >= 0.0 && e.points <= 4.0)) {
      throw std::runtime_error("grade scale entry '" + e.letter + "' outside [0, 4]");
    }
    if (i > 0 && !(entries_[i - 1].points > e.points)) {
      throw std::runtime_error("grade scale points must be strictly decreasing at '" +
                               e.letter + "'");
    }
    if (!index_.emplace(e.letter, static_cast<int>(i)).second) {
      throw std::runtime_error("duplicate grade scale letter '" + e.letter + "'");
    }
    if (e.points == 0.0) ++zeros;
  }
  if (zeros != 1) {
    throw std::runtime_error("grade scale must have exactly one entry with 0 points");
  }
}

GradeScale GradeScale::standard() {
  return GradeScale({{"A", 4.000},
                     {"A-", 3.667},
                     {"B+", 3.333},
                     {"B", 3.000},
                     {"B-", 2.667},
                     {"C+", 2.333},
                     {"C", 2.000},
                     {"C-", 1.667},
                     {"D+", 1.333},
                     {"D", 1.000},
                     {"D-", 0.667},
                     {"F", 0.000}});
}

GradeScale GradeScale::from_file(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<ScaleEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto parts = split(t, '\t');
    if (parts.size() != 2) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": want 'letter<TAB>points'");
    }
    entries.push_back({std::string(trim(parts[0])), parse_double(parts[1], "scale points")});
  }
  return GradeScale(std::move(entries));
}

double GradeScale::letter_to_points(const std::string& letter) const {
  return entries_[static_cast<std::size_t>(index_of(letter))].points;
}

bool GradeScale::has_letter(const std::string& letter) const {
  return index_.find(letter) != index_.end();
}

int GradeScale::index_of(const std::string& letter) const {
  auto it = index_.find(letter);
  if (it == index_.end()) {
    throw std::runtime_error("unknown grade letter '" + letter + "'");
  }
  return it->second;
}

int GradeScale::nearest_index(double points) const {
  // Entries are ordered from the highest grade down, so keeping the first
  // non-improving entry makes ties land on the higher grade.
  int best = 0;
  double best_dist = std::abs(points - entries_[0].points);
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    const double dist = std::abs(points - entries_[i].points);
    if (dist < best_dist - kTieEps) {
      best = static_cast<int>(i);
      best_dist = dist;
    }
  }
  return best;
}

const std::string& GradeScale::nearest_letter(double points) const {
  return entries_[static_cast<std::size_t>(nearest_index(points))].letter;
}

double GradeScale::snap_points(double points) const {
  return entries_[static_cast<std::size_t>(nearest_index(points))].points;
}

int GradeScale::tick_distance(const std::string& a, const std::string& b) const {
  return std::abs(index_of(a) - index_of(b));
}

}  // namespace gradepred
