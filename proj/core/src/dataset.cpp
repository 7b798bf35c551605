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

#include "gradepred/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gradepred/text.hpp"

namespace gradepred {

namespace {

using json = nlohmann::ordered_json;

// Pass/fail-style registrations the models never see. A token doubles as a
// grade only if the active scale defines it as a letter.
const std::set<std::string, std::less<>> kPassFailTokens = {"S", "N", "P", "NP", "W", "AU", "I"};

struct RawRow {
  std::string student;
  std::string course;
  CalTerm term = 0;
  double points = 0.0;
};

struct ParsedRows {
  std::vector<RawRow> rows;
  LoadStats stats;
};

ParsedRows parse_rows(const std::string& content, const GradeScale& scale,
                      const std::string& origin) {
  ParsedRows out;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (!saw_header) {
      const auto head = split(t, ',');
      if (head.size() != 4 || trim(head[0]) != "student_id" || trim(head[1]) != "course_id" ||
          trim(head[2]) != "term" || trim(head[3]) != "grade") {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": missing header 'student_id,course_id,term,grade'");
      }
      saw_header = true;
      continue;
    }
    const auto parts = split(t, ',');
    if (parts.size() != 4) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": want 4 comma-separated fields, got " +
                               std::to_string(parts.size()));
    }
    RawRow row;
    row.student = std::string(trim(parts[0]));
    row.course = std::string(trim(parts[1]));
    if (row.student.empty() || row.course.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty id field");
    }
    try {
      row.term = parse_cal_term(std::string(trim(parts[2])));
    } catch (const std::exception& e) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }

    const std::string grade(trim(parts[3]));
    if (scale.has_letter(grade)) {
      row.points = scale.letter_to_points(grade);
    } else if (kPassFailTokens.count(grade) > 0) {
      ++out.stats.dropped_passfail;
      continue;
    } else {
      double points = 0.0;
      try {
        points = parse_double(grade, "grade");
      } catch (const std::exception&) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": unknown grade token '" + grade + "'");
      }
      if (points < 0.0 || points > 4.0) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": grade " + grade +
                                 " outside [0, 4]");
      }
      row.points = scale.snap_points(points);
    }
    out.rows.push_back(std::move(row));
    ++out.stats.rows;
  }
  return out;
}

RecordSet records_from_rows(ParsedRows parsed) {
  RecordSet rs;
  rs.stats = parsed.stats;
  std::vector<std::string> student_ids, course_ids;
  student_ids.reserve(parsed.rows.size());
  course_ids.reserve(parsed.rows.size());
  for (const RawRow& r : parsed.rows) {
    student_ids.push_back(r.student);
    course_ids.push_back(r.course);
  }
  rs.students = IdTable::from_ids(std::move(student_ids));
  rs.courses = IdTable::from_ids(std::move(course_ids));
  rs.records.reserve(parsed.rows.size());
  for (const RawRow& r : parsed.rows) {
    rs.records.push_back(
        {rs.students.handle(r.student), rs.courses.handle(r.course), r.term, r.points});
  }
  std::sort(rs.records.begin(), rs.records.end(), [](const GradeRecord& a, const GradeRecord& b) {
    if (a.student != b.student) return a.student < b.student;
    if (a.term != b.term) return a.term < b.term;
    return a.course < b.course;
  });
  return rs;
}

// Maps pre-parsed rows onto existing vocabularies (split reload path).
std::vector<GradeRecord> records_with_tables(const ParsedRows& parsed, const IdTable& students,
                                             const IdTable& courses) {
  std::vector<GradeRecord> records;
  records.reserve(parsed.rows.size());
  for (const RawRow& r : parsed.rows) {
    records.push_back({students.handle(r.student), courses.handle(r.course), r.term, r.points});
  }
  std::sort(records.begin(), records.end(), [](const GradeRecord& a, const GradeRecord& b) {
    if (a.student != b.student) return a.student < b.student;
    if (a.term != b.term) return a.term < b.term;
    return a.course < b.course;
  });
  return records;
}

}  // namespace

RecordSet load_records_from_string(const std::string& content, const GradeScale& scale,
                                   const std::string& origin) {
  return records_from_rows(parse_rows(content, scale, origin));
}

RecordSet load_records(const std::string& path, const GradeScale& scale) {
  return load_records_from_string(read_file(path), scale, path);
}

std::vector<StudentTimeline> build_timelines(const RecordSet& rs) {
  std::vector<StudentTimeline> timelines;
  for (std::size_t i = 0; i < rs.records.size();) {
    StudentTimeline tl;
    tl.student = rs.records[i].student;
    while (i < rs.records.size() && rs.records[i].student == tl.student) {
      const GradeRecord& rec = rs.records[i];
      if (tl.terms.empty() || tl.terms.back().calendar_term != rec.term) {
        TermGroup group;
        group.calendar_term = rec.term;
        group.relative_term = static_cast<int>(tl.terms.size()) + 1;
        tl.terms.push_back(std::move(group));
      }
      TermGroup& group = tl.terms.back();
      for (const TimelineEntry& e : group.courses) {
        if (e.course == rec.course) {
          throw std::runtime_error("student '" + rs.students.external(rec.student) +
                                   "' has course '" + rs.courses.external(rec.course) +
                                   "' twice in term " + format_cal_term(rec.term));
        }
      }
      group.courses.push_back({rec.course, rec.grade_points, 0.0});
      ++i;
    }
    timelines.push_back(std::move(tl));
  }
  return timelines;
}

void row_center(StudentTimeline& timeline) {
  double sum = 0.0;
  int count = 0;
  for (TermGroup& group : timeline.terms) {
    for (TimelineEntry& entry : group.courses) {
      if (count == 0) {
        // No average previous grade exists; 0.01 keeps the course alive as a
        // prior instead of erasing it with a zero weight.
        entry.relative_grade = 0.01;
      } else {
        const double diff = entry.raw_grade - sum / count;
        entry.relative_grade = (diff == 0.0) ? 0.01 : diff;
      }
    }
    for (const TimelineEntry& entry : group.courses) {
      sum += entry.raw_grade;
      ++count;
    }
  }
}

std::vector<PredictionInstance> build_instances(const StudentTimeline& timeline) {
  std::vector<PredictionInstance> instances;
  std::vector<std::pair<PriorCourse, int>> history;  // (prior, its relative term)
  double raw_sum = 0.0;
  int raw_count = 0;
  for (const TermGroup& group : timeline.terms) {
    const int t = group.relative_term;
    for (const TimelineEntry& entry : group.courses) {
      PredictionInstance inst;
      inst.student = timeline.student;
      inst.target_course = entry.course;
      inst.target_term = t;
      inst.target_calendar = group.calendar_term;
      inst.target_relative_grade = entry.relative_grade;
      inst.target_raw_grade = entry.raw_grade;
      inst.prior_mean = (raw_count > 0) ? raw_sum / raw_count : 0.0;
      inst.priors.reserve(history.size());
      for (const auto& [prior, prior_term] : history) {
        PriorCourse p = prior;
        p.term_offset = t - 1 - prior_term;
        inst.priors.push_back(p);
      }
      instances.push_back(std::move(inst));
    }
    for (const TimelineEntry& entry : group.courses) {
      history.push_back({{entry.course, entry.relative_grade, entry.raw_grade, 0}, t});
      raw_sum += entry.raw_grade;
      ++raw_count;
    }
  }
  return instances;
}

Split chronological_split(const RecordSet& rs, const SplitWindows& w) {
  if (!(w.val_start <= w.val_end) || !(w.test_start <= w.test_end) ||
      !(w.train_end < w.val_start) || !(w.train_end < w.test_start)) {
    throw std::runtime_error("split windows out of order");
  }

  std::vector<StudentTimeline> timelines = build_timelines(rs);
  for (StudentTimeline& tl : timelines) row_center(tl);

  Split split;
  split.windows = w;
  split.students = rs.students;
  split.courses = rs.courses;
  split.course_in_train.assign(static_cast<std::size_t>(rs.courses.size()), 0);

  std::vector<std::vector<PredictionInstance>> per_student;
  per_student.reserve(timelines.size());
  for (const StudentTimeline& tl : timelines) {
    per_student.push_back(build_instances(tl));
  }

  for (const auto& instances : per_student) {
    for (const PredictionInstance& inst : instances) {
      if (inst.target_calendar <= w.train_end && !inst.priors.empty()) {
        split.course_in_train[static_cast<std::size_t>(inst.target_course)] = 1;
        for (const PriorCourse& p : inst.priors) {
          split.course_in_train[static_cast<std::size_t>(p.course)] = 1;
        }
        split.train.push_back(inst);
      }
    }
  }
  if (split.train.empty()) {
    throw std::runtime_error("empty training window: no instance targets a term <= " +
                             format_cal_term(w.train_end));
  }

  auto eligible = [&](const PredictionInstance& inst, CalTerm lo, CalTerm hi) {
    return inst.target_calendar >= lo && inst.target_calendar <= hi &&
           inst.priors.size() >= 4 &&
           split.course_in_train[static_cast<std::size_t>(inst.target_course)] != 0;
  };
  for (const auto& instances : per_student) {
    for (const PredictionInstance& inst : instances) {
      if (eligible(inst, w.val_start, w.val_end)) split.validation.push_back(inst);
      if (eligible(inst, w.test_start, w.test_end)) split.test.push_back(inst);
    }
  }
  return split;
}

namespace {

std::string format_records_file(const RecordSet& rs, const GradeScale& scale, CalTerm max_term) {
  std::string out = "student_id,course_id,term,grade\n";
  for (const GradeRecord& rec : rs.records) {
    if (rec.term > max_term) continue;
    out += rs.students.external(rec.student);
    out += ',';
    out += rs.courses.external(rec.course);
    out += ',';
    out += format_cal_term(rec.term);
    out += ',';
    out += scale.nearest_letter(rec.grade_points);  // points are exact scale values
    out += '\n';
  }
  return out;
}

std::vector<std::string> vocab_external(const Split& split) {
  std::vector<std::string> vocab;
  for (std::int32_t c = 0; c < split.courses.size(); ++c) {
    if (split.course_in_train[static_cast<std::size_t>(c)]) {
      vocab.push_back(split.courses.external(c));
    }
  }
  return vocab;
}

}  // namespace

void save_split(const Split& split, const RecordSet& rs, const GradeScale& scale,
                const std::string& dir) {
  std::filesystem::create_directories(dir);
  const SplitWindows& w = split.windows;
  write_file(dir + "/train.csv", format_records_file(rs, scale, w.train_end));
  write_file(dir + "/validation.csv", format_records_file(rs, scale, w.val_end));
  write_file(dir + "/test.csv", format_records_file(rs, scale, w.test_end));

  json manifest;
  manifest["format"] = "gradepred-split";
  manifest["version"] = 1;
  manifest["windows"] = {{"train_end", format_cal_term(w.train_end)},
                         {"val_start", format_cal_term(w.val_start)},
                         {"val_end", format_cal_term(w.val_end)},
                         {"test_start", format_cal_term(w.test_start)},
                         {"test_end", format_cal_term(w.test_end)}};
  const SplitCounts counts = split.counts();
  manifest["counts"] = {{"train", counts.train},
                        {"validation", counts.validation},
                        {"test", counts.test}};
  manifest["ingest"] = {{"rows", rs.stats.rows}, {"dropped_passfail", rs.stats.dropped_passfail}};
  manifest["students"] = split.students.ordered_ids();
  manifest["courses"] = split.courses.ordered_ids();
  manifest["course_vocab"] = vocab_external(split);
  write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

Split load_split(const std::string& dir, const GradeScale& scale) {
  const json manifest = json::parse(read_file(dir + "/manifest.json"));
  if (manifest.value("format", "") != "gradepred-split") {
    throw std::runtime_error(dir + "/manifest.json is not a split manifest");
  }

  Split split;
  split.students = IdTable::from_ids(manifest.at("students").get<std::vector<std::string>>());
  split.courses = IdTable::from_ids(manifest.at("courses").get<std::vector<std::string>>());
  const auto& w = manifest.at("windows");
  split.windows.train_end = parse_cal_term(w.at("train_end").get<std::string>());
  split.windows.val_start = parse_cal_term(w.at("val_start").get<std::string>());
  split.windows.val_end = parse_cal_term(w.at("val_end").get<std::string>());
  split.windows.test_start = parse_cal_term(w.at("test_start").get<std::string>());
  split.windows.test_end = parse_cal_term(w.at("test_end").get<std::string>());

  split.course_in_train.assign(static_cast<std::size_t>(split.courses.size()), 0);
  for (const auto& id : manifest.at("course_vocab")) {
    split.course_in_train[static_cast<std::size_t>(
        split.courses.handle(id.get<std::string>()))] = 1;
  }

  auto instances_of = [&](const std::string& file) {
    const ParsedRows parsed = parse_rows(read_file(dir + "/" + file), scale, dir + "/" + file);
    RecordSet rs;
    rs.students = split.students;
    rs.courses = split.courses;
    rs.records = records_with_tables(parsed, split.students, split.courses);
    std::vector<StudentTimeline> timelines = build_timelines(rs);
    std::vector<PredictionInstance> all;
    for (StudentTimeline& tl : timelines) {
      row_center(tl);
      auto instances = build_instances(tl);
      all.insert(all.end(), std::make_move_iterator(instances.begin()),
                 std::make_move_iterator(instances.end()));
    }
    return all;
  };

  std::vector<char> recomputed_vocab(static_cast<std::size_t>(split.courses.size()), 0);
  for (PredictionInstance& inst : instances_of("train.csv")) {
    if (inst.target_calendar <= split.windows.train_end && !inst.priors.empty()) {
      recomputed_vocab[static_cast<std::size_t>(inst.target_course)] = 1;
      for (const PriorCourse& p : inst.priors) {
        recomputed_vocab[static_cast<std::size_t>(p.course)] = 1;
      }
      split.train.push_back(std::move(inst));
    }
  }
  if (recomputed_vocab != split.course_in_train) {
    throw std::runtime_error(dir + ": manifest course_vocab does not match train.csv");
  }

  auto take_window = [&](const std::string& file, CalTerm lo, CalTerm hi,
                         std::vector<PredictionInstance>& out) {
    for (PredictionInstance& inst : instances_of(file)) {
      if (inst.target_calendar >= lo && inst.target_calendar <= hi && inst.priors.size() >= 4 &&
          split.course_in_train[static_cast<std::size_t>(inst.target_course)] != 0) {
        out.push_back(std::move(inst));
      }
    }
  };
  take_window("validation.csv", split.windows.val_start, split.windows.val_end, split.validation);
  take_window("test.csv", split.windows.test_start, split.windows.test_end, split.test);

  const auto& counts = manifest.at("counts");
  if (split.train.size() != counts.at("train").get<std::size_t>() ||
      split.validation.size() != counts.at("validation").get<std::size_t>() ||
      split.test.size() != counts.at("test").get<std::size_t>()) {
    throw std::runtime_error(dir + ": split files do not match manifest counts");
  }
  return split;
}

}  // namespace gradepred
