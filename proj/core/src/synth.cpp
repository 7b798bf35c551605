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

#include "gradepred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "gradepred/rng.hpp"
#include "gradepred/text.hpp"

namespace gradepred {

namespace {

std::unordered_map<std::string, std::string> parse_kv(const std::string& content) {
  std::unordered_map<std::string, std::string> kv;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view t = trim(line);
    if (const auto hash = t.find('#'); hash != std::string_view::npos) {
      t = trim(t.substr(0, hash));
    }
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error("synth config line " + std::to_string(lineno) +
                               ": want 'key = value'");
    }
    kv.emplace(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
  }
  return kv;
}

void validate(const SynthConfig& c) {
  if (c.n_students < 1 || c.n_courses < 1 || c.n_terms < 1 || c.courses_per_term < 1) {
    throw std::runtime_error("synth config: counts must be positive");
  }
  if (c.prereqs_min < 1 || c.prereqs_max < c.prereqs_min) {
    throw std::runtime_error("synth config: need 1 <= prereqs_min <= prereqs_max");
  }
  if (c.prereq_window < 1) throw std::runtime_error("synth config: prereq_window must be >= 1");
  if (c.noise_std < 0.0 || c.ability_std < 0.0 || c.aptitude_std < 0.0 ||
      c.difficulty_std < 0.0) {
    throw std::runtime_error("synth config: standard deviations must be >= 0");
  }
  if (c.start_spread < 1) throw std::runtime_error("synth config: start_spread must be >= 1");
  if (!(c.prereq_affinity >= 1.0)) {
    throw std::runtime_error("synth config: prereq_affinity must be >= 1");
  }
}

double clip_grade(double g) { return std::min(4.0, std::max(0.0, g)); }

}  // namespace

SynthConfig parse_synth_config(const std::string& content) {
  SynthConfig c;
  for (const auto& [key, value] : parse_kv(content)) {
    if (key == "n_students") c.n_students = static_cast<int>(parse_int(value, key));
    else if (key == "n_courses") c.n_courses = static_cast<int>(parse_int(value, key));
    else if (key == "n_terms") c.n_terms = static_cast<int>(parse_int(value, key));
    else if (key == "courses_per_term") c.courses_per_term = static_cast<int>(parse_int(value, key));
    else if (key == "prereqs_min") c.prereqs_min = static_cast<int>(parse_int(value, key));
    else if (key == "prereqs_max") c.prereqs_max = static_cast<int>(parse_int(value, key));
    else if (key == "prereq_window") c.prereq_window = static_cast<int>(parse_int(value, key));
    else if (key == "noise_std") c.noise_std = parse_double(value, key);
    else if (key == "ability_std") c.ability_std = parse_double(value, key);
    else if (key == "aptitude_std") c.aptitude_std = parse_double(value, key);
    else if (key == "difficulty_std") c.difficulty_std = parse_double(value, key);
    else if (key == "prereq_affinity") c.prereq_affinity = parse_double(value, key);
    else if (key == "base_grade") c.base_grade = parse_double(value, key);
    else if (key == "start_year") c.start_year = static_cast<int>(parse_int(value, key));
    else if (key == "start_spread") c.start_spread = static_cast<int>(parse_int(value, key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, key));
    else throw std::runtime_error("synth config: unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

SynthConfig load_synth_config(const std::string& path) {
  return parse_synth_config(read_file(path));
}

std::string SynthData::student_id(int s) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%05d", s);
  return buf;
}

std::string SynthData::course_id(int c) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "C%04d", c);
  return buf;
}

SynthData generate(const SynthConfig& config) {
  validate(config);
  const int n = config.n_courses;
  const int m = config.n_students;
  const int nt = config.n_terms;

  // Courses are split into contiguous per-term levels; a course's
  // prerequisites come from lower levels only.
  std::vector<int> level_start(static_cast<std::size_t>(nt) + 1);
  for (int t = 0; t <= nt; ++t) {
    level_start[static_cast<std::size_t>(t)] = static_cast<int>(
        static_cast<long long>(t) * n / nt);
  }
  int min_level_size = n;
  for (int t = 0; t < nt; ++t) {
    min_level_size = std::min(min_level_size, level_start[t + 1] - level_start[t]);
  }
  if (config.courses_per_term > min_level_size) {
    throw std::runtime_error(
        "infeasible synth config: courses_per_term * n_terms (" +
        std::to_string(config.courses_per_term * nt) + ") exceeds the reachable course pool (" +
        std::to_string(n) + " courses over " + std::to_string(nt) + " terms)");
  }

  SynthData data;
  data.course_level.resize(static_cast<std::size_t>(n));
  for (int t = 0; t < nt; ++t) {
    for (int c = level_start[t]; c < level_start[t + 1]; ++c) {
      data.course_level[static_cast<std::size_t>(c)] = t;
    }
  }

  Rng rng(config.seed);

  // Prerequisite DAG + planted weights.
  std::vector<std::vector<std::pair<int, double>>> prereqs(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const int level = data.course_level[static_cast<std::size_t>(c)];
    if (level == 0) continue;
    // Prerequisites come from the immediately preceding levels, the way a
    // course builds on recent material rather than on entry courses only.
    const int pool_lo = level_start[std::max(0, level - config.prereq_window)];
    const int pool = level_start[level] - pool_lo;
    const int want = rng.uniform_int(config.prereqs_min, std::min(config.prereqs_max, pool));
    std::vector<int> candidates(static_cast<std::size_t>(pool));
    std::iota(candidates.begin(), candidates.end(), pool_lo);
    for (int i = 0; i < want; ++i) {
      const int j = rng.uniform_int(i, pool - 1);
      std::swap(candidates[static_cast<std::size_t>(i)], candidates[static_cast<std::size_t>(j)]);
    }
    std::vector<std::pair<int, double>> chosen;
    double total = 0.0;
    for (int i = 0; i < want; ++i) {
      const double w = rng.uniform(0.2, 1.0);
      chosen.push_back({candidates[static_cast<std::size_t>(i)], w});
      total += w;
    }
    for (auto& [course, w] : chosen) w /= total;
    std::sort(chosen.begin(), chosen.end());
    prereqs[static_cast<std::size_t>(c)] = chosen;
    auto& truth_row = data.truth[SynthData::course_id(c)];
    for (const auto& [course, w] : chosen) truth_row.push_back({SynthData::course_id(course), w});
  }

  std::vector<double> difficulty(static_cast<std::size_t>(n));
  for (double& v : difficulty) v = rng.normal(0.0, config.difficulty_std);
  data.ability.resize(static_cast<std::size_t>(m));
  for (double& v : data.ability) v = rng.normal(0.0, config.ability_std);

  const CalTerm start_base = make_cal_term(config.start_year, Season::spring);
  data.achievement.assign(static_cast<std::size_t>(m), std::vector<double>());

  for (int s = 0; s < m; ++s) {
    // Latent achievement for every course, in index order (prerequisites
    // always have smaller indices). Ability carries through the convex
    // prerequisite weights with coefficient exactly 1, and per-course noise
    // propagates to dependent courses the same way the grades themselves do.
    // Entry-level courses get an extra per-student aptitude term so the
    // achievement columns stay linearly independent even at noise_std = 0.
    std::vector<double>& ach = data.achievement[static_cast<std::size_t>(s)];
    ach.resize(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
      const std::size_t ci = static_cast<std::size_t>(c);
      double acc = config.base_grade + difficulty[ci];
      if (data.course_level[ci] == 0) {
        acc += data.ability[static_cast<std::size_t>(s)] + rng.normal(0.0, config.aptitude_std);
      } else {
        for (const auto& [k, w] : prereqs[ci]) {
          const std::size_t ki = static_cast<std::size_t>(k);
          acc += w * (ach[ki] - config.base_grade - difficulty[ki]);
        }
      }
      ach[ci] = acc + rng.normal(0.0, config.noise_std);
    }

    // Enrollment chains along the DAG: a course is prereq_affinity times more
    // likely per already-taken prerequisite, the way students follow the
    // courses they are prepared for.
    std::vector<char> took(static_cast<std::size_t>(n), 0);
    const CalTerm start = start_base + rng.uniform_int(0, config.start_spread - 1);
    for (int w = 0; w < nt; ++w) {
      const int lo = level_start[w];
      const int pool = level_start[w + 1] - lo;
      std::vector<double> weight(static_cast<std::size_t>(pool));
      for (int i = 0; i < pool; ++i) {
        int satisfied = 0;
        for (const auto& [k, pw] : prereqs[static_cast<std::size_t>(lo + i)]) {
          if (took[static_cast<std::size_t>(k)]) ++satisfied;
        }
        weight[static_cast<std::size_t>(i)] = std::pow(config.prereq_affinity, satisfied);
      }
      std::vector<int> taken;
      for (int pick = 0; pick < config.courses_per_term; ++pick) {
        double total = 0.0;
        for (double v : weight) total += v;
        double u = rng.uniform() * total;
        int chosen = -1;
        for (int i = 0; i < pool; ++i) {
          if (weight[static_cast<std::size_t>(i)] == 0.0) continue;
          u -= weight[static_cast<std::size_t>(i)];
          chosen = i;
          if (u < 0.0) break;
        }
        weight[static_cast<std::size_t>(chosen)] = 0.0;
        taken.push_back(lo + chosen);
      }
      std::sort(taken.begin(), taken.end());
      for (int c : taken) {
        took[static_cast<std::size_t>(c)] = 1;
        data.rows.push_back({s, c, start + w, clip_grade(ach[static_cast<std::size_t>(c)])});
      }
    }
  }
  return data;
}

std::string format_records_csv(const SynthData& data, const GradeScale& scale) {
  std::string out = "student_id,course_id,term,grade\n";
  for (const SynthRow& row : data.rows) {
    out += SynthData::student_id(row.student) + "," + SynthData::course_id(row.course) + "," +
           format_cal_term(row.term) + "," + scale.nearest_letter(row.observed) + "\n";
  }
  return out;
}

std::string format_truth_csv(const PlantedTruth& truth) {
  std::string out = "target_course,prior_course,weight\n";
  for (const auto& [target, row] : truth) {
    for (const auto& [prior, w] : row) {
      out += target + "," + prior + "," + format_double(w) + "\n";
    }
  }
  return out;
}

void write_synth(const SynthData& data, const GradeScale& scale, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/data.csv", format_records_csv(data, scale));
  write_file(dir + "/truth.csv", format_truth_csv(data.truth));
}

PlantedTruth load_truth(const std::string& path) {
  PlantedTruth truth;
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (lineno == 1 && t == "target_course,prior_course,weight") continue;
    const auto parts = split(t, ',');
    if (parts.size() != 3) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": want 3 fields");
    }
    truth[std::string(trim(parts[0]))].push_back(
        {std::string(trim(parts[1])), parse_double(parts[2], "weight")});
  }
  return truth;
}

namespace {

// Truth re-keyed by course handle; planted ids missing from the vocabulary
// are dropped (they can never appear in a prior list).
std::unordered_map<CourseId, std::unordered_set<CourseId>> truth_by_handle(
    const PlantedTruth& truth, const IdTable& courses) {
  std::unordered_map<CourseId, std::unordered_set<CourseId>> by_handle;
  for (const auto& [target, row] : truth) {
    if (!courses.contains(target)) continue;
    auto& set = by_handle[courses.handle(target)];
    for (const auto& [prior, w] : row) {
      if (courses.contains(prior)) set.insert(courses.handle(prior));
    }
  }
  return by_handle;
}

template <typename MassFn>
RecoveryScore recovery_impl(const PlantedTruth& truth,
                            const std::vector<PredictionInstance>& instances,
                            const IdTable& courses, MassFn&& mass_of) {
  const auto by_handle = truth_by_handle(truth, courses);
  RecoveryScore score;
  double total = 0.0;
  for (const PredictionInstance& inst : instances) {
    const auto it = by_handle.find(inst.target_course);
    std::vector<std::size_t> present;
    if (it != by_handle.end()) {
      for (std::size_t i = 0; i < inst.priors.size(); ++i) {
        if (it->second.count(inst.priors[i].course) > 0) present.push_back(i);
      }
    }
    if (present.empty()) {
      ++score.skipped;
      continue;
    }
    total += mass_of(inst, present);
    ++score.used;
  }
  score.mean_mass = score.used > 0 ? total / static_cast<double>(score.used) : 0.0;
  return score;
}

}  // namespace

RecoveryScore attention_recovery(const AttentionFn& attention, const PlantedTruth& truth,
                                 const std::vector<PredictionInstance>& instances,
                                 const IdTable& courses) {
  return recovery_impl(truth, instances, courses,
                       [&](const PredictionInstance& inst, const std::vector<std::size_t>& present) {
                         const ProbVector p = attention(inst);
                         double mass = 0.0;
                         for (std::size_t i : present) mass += p.values[i];
                         return mass;
                       });
}

RecoveryScore attention_recovery(const NakModel& model, const PlantedTruth& truth,
                                 const std::vector<PredictionInstance>& instances,
                                 const IdTable& courses) {
  return attention_recovery(
      [&model](const PredictionInstance& inst) { return model.knowledge_state(inst).attention; },
      truth, instances, courses);
}

RecoveryScore uniform_recovery_baseline(const PlantedTruth& truth,
                                        const std::vector<PredictionInstance>& instances,
                                        const IdTable& courses) {
  return recovery_impl(truth, instances, courses,
                       [](const PredictionInstance& inst, const std::vector<std::size_t>& present) {
                         return static_cast<double>(present.size()) /
                                static_cast<double>(inst.priors.size());
                       });
}

}  // namespace gradepred
