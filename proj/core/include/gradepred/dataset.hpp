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
#include <vector>

#include "gradepred/grade_scale.hpp"
#include "gradepred/types.hpp"

namespace gradepred {

struct LoadStats {
  std::size_t rows = 0;              // records kept
  std::size_t dropped_passfail = 0;  // pass/fail-style rows skipped
};

// Ingested records plus the handle tables built from them. Records are
// sorted by (student, term, course handle), so identical input contents
// produce identical record sets regardless of row order.
struct RecordSet {
  std::vector<GradeRecord> records;
  IdTable students;
  IdTable courses;
  LoadStats stats;
};

// Input format: header line, then one record per line:
//   student_id,course_id,term,grade
// term is YYYYSP|YYYYSU|YYYYFA; grade is a scale letter or a decimal in
// [0, 4] (decimals snap to the nearest scale value). Pass/fail-style grade
// tokens (S, N, P, NP, W, AU, I) are dropped and counted.
RecordSet load_records(const std::string& path, const GradeScale& scale);
RecordSet load_records_from_string(const std::string& content, const GradeScale& scale,
                                   const std::string& origin = "<memory>");

// Groups a record set into per-student term-ordered timelines; relative
// grades are not yet filled in (see row_center). Throws if a student has
// the same course twice in one term.
std::vector<StudentTimeline> build_timelines(const RecordSet& rs);

// Fills relative grades: grade minus the mean of all raw grades in strictly
// earlier terms. An exact-zero difference becomes 0.01, and first-term
// courses (no prior mean) are also assigned 0.01 so they still contribute
// when used as priors.
void row_center(StudentTimeline& timeline);

// One instance per course taken, with priors = all strictly-earlier-term
// courses. Requires row_center to have run. Instances with no priors are
// returned too (the split filters them).
std::vector<PredictionInstance> build_instances(const StudentTimeline& timeline);

struct SplitWindows {
  CalTerm train_end = 0;   // train covers everything up to and including this
  CalTerm val_start = 0, val_end = 0;
  CalTerm test_start = 0, test_end = 0;  // may overlap the validation window
};

struct SplitCounts {
  std::size_t train = 0, validation = 0, test = 0;
};

struct Split {
  std::vector<PredictionInstance> train, validation, test;
  std::vector<char> course_in_train;  // per course handle: appears in a train instance
  IdTable students, courses;
  SplitWindows windows;
  SplitCounts counts() const {
    return {train.size(), validation.size(), test.size()};
  }
};

// Assigns instances by the target's calendar term. Train instances need at
// least one prior; validation/test instances need at least four priors and
// a target course present in the training instances. Priors always cover the
// student's whole earlier history, whatever window they fall in.
Split chronological_split(const RecordSet& rs, const SplitWindows& windows);

// Persists a split as three record files (train.csv, validation.csv,
// test.csv; each holds every record up to its window's end so priors
// reconstruct exactly) plus manifest.json with the window boundaries,
// counts, and both vocabularies in handle order.
void save_split(const Split& split, const RecordSet& rs, const GradeScale& scale,
                const std::string& dir);

// Rebuilds a split from a directory written by save_split; verifies the
// instance counts against the manifest.
Split load_split(const std::string& dir, const GradeScale& scale);

}  // namespace gradepred
