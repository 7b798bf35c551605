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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gradepred/dataset.hpp"
#include "gradepred/synth.hpp"
#include "support/oracles.hpp"

using namespace gradepred;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.n_students = 250;
  c.n_courses = 24;
  c.n_terms = 4;
  c.courses_per_term = 3;
  c.start_spread = 3;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("generation is deterministic per seed") {
  const SynthConfig config = small_config();
  const SynthData a = generate(config);
  const SynthData b = generate(config);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].student == b.rows[i].student);
    CHECK(a.rows[i].course == b.rows[i].course);
    CHECK(a.rows[i].term == b.rows[i].term);
    CHECK(a.rows[i].observed == b.rows[i].observed);
  }
  CHECK(a.truth == b.truth);

  SynthConfig other = config;
  other.seed = 6;
  const SynthData c = generate(other);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.rows.size(), c.rows.size()); ++i) {
    if (a.rows[i].observed != c.rows[i].observed) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("planted truth and grades satisfy the generator invariants") {
  const SynthData data = generate(small_config());

  // Truth weights are positive and sum to 1 per target.
  CHECK(!data.truth.empty());
  for (const auto& [target, row] : data.truth) {
    REQUIRE(!row.empty());
    CHECK(row.size() >= 2);
    CHECK(row.size() <= 3);
    double sum = 0.0;
    for (const auto& [prior, w] : row) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Grades are clipped to [0, 4]; enrollment follows the course levels.
  for (const SynthRow& row : data.rows) {
    CHECK(row.observed >= 0.0);
    CHECK(row.observed <= 4.0);
  }

  // No prerequisite edge violates term order (prereq level < target level).
  for (const auto& [target, row] : data.truth) {
    const int target_level =
        data.course_level[static_cast<std::size_t>(std::stoi(target.substr(1)))];
    for (const auto& [prior, w] : row) {
      const int prior_level =
          data.course_level[static_cast<std::size_t>(std::stoi(prior.substr(1)))];
      CHECK(prior_level < target_level);
    }
  }
}

TEST_CASE("infeasible configs are rejected") {
  SynthConfig config = small_config();
  config.n_courses = 8;
  config.n_terms = 4;
  config.courses_per_term = 3;  // only 2 courses per level available
  CHECK_THROWS_WITH_AS(generate(config), doctest::Contains("infeasible"), std::runtime_error);

  SynthConfig bad = small_config();
  bad.prereqs_min = 0;
  CHECK_THROWS(generate(bad));
}

TEST_CASE("noise-free achievements recover the planted weights by regression") {
  SynthConfig config = small_config();
  config.noise_std = 0.0;
  const SynthData data = generate(config);

  int tested = 0;
  for (const auto& [target, row] : data.truth) {
    const int j = std::stoi(target.substr(1));
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int s = 0; s < config.n_students; ++s) {
      std::vector<double> features = {1.0};  // intercept absorbs the difficulty offset
      for (const auto& [prior, w] : row) {
        const int k = std::stoi(prior.substr(1));
        features.push_back(data.achievement[static_cast<std::size_t>(s)]
                                           [static_cast<std::size_t>(k)] -
                           config.base_grade);
      }
      x.push_back(std::move(features));
      y.push_back(data.achievement[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] -
                  config.base_grade);
    }
    const std::vector<double> beta = testutil::least_squares(x, y);
    for (std::size_t k = 0; k < row.size(); ++k) {
      CHECK(std::fabs(beta[k + 1] - row[k].second) < 1e-6);
    }
    if (++tested >= 8) break;
  }
  CHECK(tested >= 8);
}

TEST_CASE("generated files round-trip through ingestion with zero drops") {
  const SynthConfig config = small_config();
  const SynthData data = generate(config);
  const GradeScale scale = GradeScale::standard();
  const std::string dir =
      (std::filesystem::temp_directory_path() / "gradepred_synth_test").string();
  write_synth(data, scale, dir);

  const RecordSet rs = load_records(dir + "/data.csv", scale);
  CHECK(rs.records.size() == data.rows.size());
  CHECK(rs.stats.dropped_passfail == 0);
  CHECK(rs.students.size() == config.n_students);

  const PlantedTruth truth = load_truth(dir + "/truth.csv");
  CHECK(truth.size() == data.truth.size());
  for (const auto& [target, row] : data.truth) {
    REQUIRE(truth.count(target) == 1);
    REQUIRE(truth.at(target).size() == row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
      CHECK(truth.at(target)[i].first == row[i].first);
      CHECK(truth.at(target)[i].second == doctest::Approx(row[i].second).epsilon(1e-12));
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("attention recovery scoring") {
  // Hand-built vocabulary: c0..c4; targets c3 (prereqs c0, c1) and c4 (none).
  std::vector<std::string> ids = {"c0", "c1", "c2", "c3", "c4"};
  const IdTable courses = IdTable::from_ids(ids);
  PlantedTruth truth;
  truth["c3"] = {{"c0", 0.7}, {"c1", 0.3}};

  PredictionInstance with_prereqs;
  with_prereqs.target_course = courses.handle("c3");
  with_prereqs.priors = {{courses.handle("c0"), 0.5, 3.5, 2},
                         {courses.handle("c2"), 0.5, 3.5, 1},
                         {courses.handle("c1"), 0.5, 3.5, 0},
                         {courses.handle("c2"), 0.5, 3.5, 0}};

  PredictionInstance no_prereqs;
  no_prereqs.target_course = courses.handle("c4");
  no_prereqs.priors = {{courses.handle("c0"), 0.5, 3.5, 0}};

  const std::vector<PredictionInstance> instances = {with_prereqs, no_prereqs};

  SUBCASE("attention exactly on the planted prerequisites scores 1") {
    const AttentionFn planted = [&](const PredictionInstance& inst) {
      ProbVector p;
      p.values = {0.7, 0.0, 0.3, 0.0};
      p.support = {0, 2};
      (void)inst;
      return p;
    };
    const RecoveryScore score = attention_recovery(planted, truth, instances, courses);
    CHECK(score.used == 1);
    CHECK(score.skipped == 1);  // the no-prereq target
    CHECK(score.mean_mass == doctest::Approx(1.0));
  }

  SUBCASE("uniform attention scores k over P") {
    const AttentionFn uniform = [](const PredictionInstance& inst) {
      ProbVector p;
      p.values.assign(inst.priors.size(), 1.0 / static_cast<double>(inst.priors.size()));
      for (int i = 0; i < static_cast<int>(inst.priors.size()); ++i) p.support.push_back(i);
      return p;
    };
    const RecoveryScore score = attention_recovery(uniform, truth, instances, courses);
    CHECK(score.mean_mass == doctest::Approx(2.0 / 4.0));  // 2 planted of 4 priors

    const RecoveryScore baseline = uniform_recovery_baseline(truth, instances, courses);
    CHECK(baseline.mean_mass == doctest::Approx(score.mean_mass).epsilon(1e-12));
    CHECK(baseline.used == 1);
    CHECK(baseline.skipped == 1);
  }
}

TEST_CASE("synth config parsing") {
  const SynthConfig c = parse_synth_config(
      "n_students = 100\nn_courses = 30\nn_terms = 5\ncourses_per_term = 3\n"
      "noise_std = 0.1\nseed = 3\n");
  CHECK(c.n_students == 100);
  CHECK(c.n_courses == 30);
  CHECK(c.n_terms == 5);
  CHECK(c.noise_std == doctest::Approx(0.1));
  CHECK(c.seed == 3);
  CHECK_THROWS(parse_synth_config("nope = 1\n"));
  CHECK_THROWS(parse_synth_config("noise_std = -1\n"));
}

TEST_SUITE_END();
