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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gradepred/grade_scale.hpp"
#include "gradepred/models.hpp"
#include "gradepred/types.hpp"

namespace gradepred {

// Transcript generator with a planted prerequisite DAG. Courses are split
// evenly into n_terms levels; a course's prerequisites come from strictly
// lower levels, and students take courses_per_term level-w courses in their
// w-th term, so no prerequisite edge can violate term order.
struct SynthConfig {
  int n_students = 2000;
  int n_courses = 100;
  int n_terms = 8;
  int courses_per_term = 4;
  int prereqs_min = 2;
  int prereqs_max = 3;
  int prereq_window = 2;  // prerequisites come from this many immediately lower levels
  double noise_std = 0.3;      // observation noise at enrollment time
  double ability_std = 0.5;    // per-student latent ability
  double aptitude_std = 0.8;   // per-(student, entry course) variation
  double difficulty_std = 0.3; // per-course grade offset
  double prereq_affinity = 8.0;  // enrollment preference per satisfied prerequisite
  double base_grade = 3.0;
  int start_year = 2010;
  int start_spread = 6;  // students start within this many calendar terms
  std::uint64_t seed = 7;
};

SynthConfig parse_synth_config(const std::string& content);
SynthConfig load_synth_config(const std::string& path);

// Planted influence weights, keyed by external course id: for each target
// course with prerequisites, the (prerequisite id, weight) list. Weights are
// positive and sum to 1 per target; non-prerequisites have weight 0 (absent).
using PlantedTruth = std::map<std::string, std::vector<std::pair<std::string, double>>>;

struct SynthRow {
  int student = 0;  // generator-local indices; external ids are S%05d / C%04d
  int course = 0;
  CalTerm term = 0;
  double observed = 0.0;  // clipped to [0, 4]
};

struct SynthData {
  std::vector<SynthRow> rows;
  PlantedTruth truth;
  std::vector<int> course_level;
  std::vector<double> ability;                   // per student
  std::vector<std::vector<double>> achievement;  // noise-free latent, [student][course]

  static std::string student_id(int s);
  static std::string course_id(int c);
};

// Deterministic per seed. Throws if courses_per_term exceeds what the course
// pool can supply per term.
SynthData generate(const SynthConfig& config);

// data.csv in the ingestion format (grades as letters via the scale) and
// truth.csv as target_course,prior_course,weight rows.
void write_synth(const SynthData& data, const GradeScale& scale, const std::string& dir);
std::string format_records_csv(const SynthData& data, const GradeScale& scale);
std::string format_truth_csv(const PlantedTruth& truth);
PlantedTruth load_truth(const std::string& path);

// Mean over instances of the attention mass on the target's planted
// prerequisites among its priors. Instances whose priors contain no planted
// prerequisite are skipped and counted.
struct RecoveryScore {
  double mean_mass = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

using AttentionFn = std::function<ProbVector(const PredictionInstance&)>;

RecoveryScore attention_recovery(const AttentionFn& attention, const PlantedTruth& truth,
                                 const std::vector<PredictionInstance>& instances,
                                 const IdTable& courses);
RecoveryScore attention_recovery(const NakModel& model, const PlantedTruth& truth,
                                 const std::vector<PredictionInstance>& instances,
                                 const IdTable& courses);

// The k/P reference: uniform attention over each instance's priors.
RecoveryScore uniform_recovery_baseline(const PlantedTruth& truth,
                                        const std::vector<PredictionInstance>& instances,
                                        const IdTable& courses);

}  // namespace gradepred
