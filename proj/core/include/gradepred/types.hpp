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

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace gradepred {

// Dense handles assigned at ingestion; a side table maps them back to the
// external string identifiers.
using StudentId = std::int32_t;
using CourseId = std::int32_t;

// Calendar term index: year * 3 + season, so Spring < Summer < Fall within
// a year and terms compare chronologically across years.
using CalTerm = std::int32_t;

enum class Season : int { spring = 0, summer = 1, fall = 2 };

CalTerm make_cal_term(int year, Season season);

// Parses "YYYYSP" / "YYYYSU" / "YYYYFA"; throws on anything else.
CalTerm parse_cal_term(const std::string& token);
std::string format_cal_term(CalTerm term);

// One (student, course, term, grade) observation on the 0-4 point scale.
struct GradeRecord {
  StudentId student = -1;
  CourseId course = -1;
  CalTerm term = 0;
  double grade_points = 0.0;
};

// Bidirectional map between external string ids and dense 0..n-1 handles.
// Handles are assigned in lexicographic order of the external ids, so the
// same set of ids always produces the same assignment regardless of the
// order rows appear in the input.
class IdTable {
 public:
  IdTable() = default;

  // Builds the table from a set of ids (duplicates collapse).
  static IdTable from_ids(std::vector<std::string> ids);

  std::int32_t handle(const std::string& external_id) const;  // throws if unknown
  bool contains(const std::string& external_id) const;
  const std::string& external(std::int32_t handle) const;
  std::int32_t size() const { return static_cast<std::int32_t>(ordered_.size()); }
  const std::vector<std::string>& ordered_ids() const { return ordered_; }

  bool operator==(const IdTable& other) const { return ordered_ == other.ordered_; }

 private:
  std::vector<std::string> ordered_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct TimelineEntry {
  CourseId course = -1;
  double raw_grade = 0.0;
  double relative_grade = 0.0;
};

// Courses a student took in one term. relative_term is numbered from 1 per
// student; calendar_term is the shared chronological index.
struct TermGroup {
  int relative_term = 0;
  CalTerm calendar_term = 0;
  std::vector<TimelineEntry> courses;
};

// A student's term-ordered course history.
struct StudentTimeline {
  StudentId student = -1;
  std::vector<TermGroup> terms;
};

struct PriorCourse {
  CourseId course = -1;
  double relative_grade = 0.0;
  double raw_grade = 0.0;
  int term_offset = 0;  // target relative term - 1 - prior relative term, >= 0
};

// One (target course, prior history) pair used for training and inference.
struct PredictionInstance {
  StudentId student = -1;
  CourseId target_course = -1;
  int target_term = 0;  // relative term of the target, 1-based
  CalTerm target_calendar = 0;
  double target_relative_grade = 0.0;
  double target_raw_grade = 0.0;
  double prior_mean = 0.0;  // mean raw grade over all terms before target_term
  std::vector<PriorCourse> priors;
};

}  // namespace gradepred
