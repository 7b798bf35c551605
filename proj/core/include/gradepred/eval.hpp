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

#include <span>
#include <string>
#include <vector>

#include "gradepred/grade_scale.hpp"
#include "gradepred/models.hpp"
#include "gradepred/types.hpp"

namespace gradepred {

// sqrt(mean of squared (predicted - actual)); throws on empty input.
double rmse(std::span<const std::pair<double, double>> pairs);

struct PtaInput {
  double predicted_relative = 0.0;
  double actual_relative = 0.0;
  double prior_mean = 0.0;  // reconstructs the absolute grades
};

struct PtaResult {
  double pta0 = 0.0, pta1 = 0.0, pta2 = 0.0;  // percentages
};

// Absolute grade = relative + prior mean; both sides snap to their nearest
// letter, and PTAk is the percentage with tick error <= k.
PtaResult pta(std::span<const PtaInput> inputs, const GradeScale& scale);

struct ResidualRow {
  StudentId student = -1;
  CourseId target = -1;
  double predicted_relative = 0.0;
  double actual_relative = 0.0;
  std::string predicted_letter;
  std::string actual_letter;
  int tick_error = 0;
};

struct EvalReport {
  double rmse = 0.0;
  double pta0 = 0.0, pta1 = 0.0, pta2 = 0.0;
  std::size_t n = 0;
  std::vector<ResidualRow> residuals;
};

// Full report over a frozen model. Models trained on actual grades predict
// on the absolute scale directly; their relative predictions are recovered
// by subtracting the prior mean so the report stays in one space.
EvalReport evaluate(const GradeModel& model, const std::vector<PredictionInstance>& instances,
                    const GradeScale& scale);

// Machine-readable form: "key value" header lines, then one CSV row per
// instance.
std::string format_report(const EvalReport& report, ModelKind kind, const IdTable& students,
                          const IdTable& courses);

// Human-readable one-row table: Model, RMSE, PTA0, PTA1, PTA2.
std::string format_summary_table(const EvalReport& report, ModelKind kind);

struct TTestResult {
  double t = 0.0;
  int dof = 0;
  double p_value = 0.0;  // two-sided
  double mean_diff = 0.0;
};

// Paired Student's t-test on two equal-length value vectors (typically two
// models' per-instance squared errors). Throws if sizes differ or n < 2.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace gradepred
