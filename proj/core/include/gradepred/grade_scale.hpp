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
#include <unordered_map>
#include <vector>

namespace gradepred {

struct ScaleEntry {
  std::string letter;
  double points = 0.0;
};

// Ordered letter-grade scale. Entries are listed from the highest grade down;
// points must be strictly decreasing, letters unique, exactly one entry at 0,
// and the scale must have at least two entries.
//
// Immutable after construction; safe for concurrent reads.
class GradeScale {
 public:
  explicit GradeScale(std::vector<ScaleEntry> entries);

  // The default 12-entry scale: A 4.000 ... D- 0.667, F 0.000.
  static GradeScale standard();

  // Loads an override scale: one "letter<TAB>points" line per entry,
  // ordered descending. Blank lines and lines starting with '#' are skipped.
  static GradeScale from_file(const std::string& path);

  double letter_to_points(const std::string& letter) const;
  bool has_letter(const std::string& letter) const;

  // Scale entry minimizing |points - entry.points|; ties go to the higher
  // grade. Points may fall outside [0, 4].
  const std::string& nearest_letter(double points) const;

  // Points value of the nearest scale entry (same tie rule).
  double snap_points(double points) const;

  // Absolute difference of the two letters' positions in the ordered scale.
  int tick_distance(const std::string& a, const std::string& b) const;

  int index_of(const std::string& letter) const;  // throws if unknown
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<ScaleEntry>& entries() const { return entries_; }

 private:
  int nearest_index(double points) const;

  std::vector<ScaleEntry> entries_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace gradepred
