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

#include "gradepred/eval.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "gradepred/text.hpp"

namespace gradepred {

double rmse(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw std::runtime_error("rmse over empty input");
  double sq = 0.0;
  for (const auto& [predicted, actual] : pairs) {
    const double r = predicted - actual;
    sq += r * r;
  }
  return std::sqrt(sq / static_cast<double>(pairs.size()));
}

PtaResult pta(std::span<const PtaInput> inputs, const GradeScale& scale) {
  if (inputs.empty()) throw std::runtime_error("pta over empty input");
  std::size_t within0 = 0, within1 = 0, within2 = 0;
  for (const PtaInput& in : inputs) {
    const std::string& predicted = scale.nearest_letter(in.predicted_relative + in.prior_mean);
    const std::string& actual = scale.nearest_letter(in.actual_relative + in.prior_mean);
    const int ticks = scale.tick_distance(predicted, actual);
    if (ticks <= 0) ++within0;
    if (ticks <= 1) ++within1;
    if (ticks <= 2) ++within2;
  }
  const double n = static_cast<double>(inputs.size());
  return {100.0 * within0 / n, 100.0 * within1 / n, 100.0 * within2 / n};
}

EvalReport evaluate(const GradeModel& model, const std::vector<PredictionInstance>& instances,
                    const GradeScale& scale) {
  if (instances.empty()) throw std::runtime_error("evaluate over empty instance set");
  EvalReport report;
  report.n = instances.size();
  report.residuals.reserve(instances.size());

  std::vector<std::pair<double, double>> pairs;
  std::vector<PtaInput> pta_inputs;
  pairs.reserve(instances.size());
  pta_inputs.reserve(instances.size());

  for (const PredictionInstance& inst : instances) {
    const double raw_prediction = model.predict(inst);
    // Raw-grade models predict on the absolute scale already.
    const double predicted_rel =
        model.use_raw_grades() ? raw_prediction - inst.prior_mean : raw_prediction;
    const double actual_rel = inst.target_relative_grade;
    pairs.push_back({predicted_rel, actual_rel});
    pta_inputs.push_back({predicted_rel, actual_rel, inst.prior_mean});

    ResidualRow row;
    row.student = inst.student;
    row.target = inst.target_course;
    row.predicted_relative = predicted_rel;
    row.actual_relative = actual_rel;
    row.predicted_letter = scale.nearest_letter(predicted_rel + inst.prior_mean);
    row.actual_letter = scale.nearest_letter(actual_rel + inst.prior_mean);
    row.tick_error = scale.tick_distance(row.predicted_letter, row.actual_letter);
    report.residuals.push_back(std::move(row));
  }

  report.rmse = rmse(pairs);
  const PtaResult p = pta(pta_inputs, scale);
  report.pta0 = p.pta0;
  report.pta1 = p.pta1;
  report.pta2 = p.pta2;
  if (!(report.pta0 <= report.pta1 && report.pta1 <= report.pta2 && report.pta2 <= 100.0)) {
    throw std::runtime_error("pta monotonicity violated (internal error)");
  }
  return report;
}

std::string format_report(const EvalReport& report, ModelKind kind, const IdTable& students,
                          const IdTable& courses) {
  std::string out;
  out += "model " + to_string(kind) + "\n";
  out += "n " + std::to_string(report.n) + "\n";
  out += "rmse " + format_double(report.rmse) + "\n";
  out += "pta0 " + format_double(report.pta0) + "\n";
  out += "pta1 " + format_double(report.pta1) + "\n";
  out += "pta2 " + format_double(report.pta2) + "\n";
  out += "student,target,predicted_relative,actual_relative,predicted_letter,actual_letter,"
         "tick_error\n";
  for (const ResidualRow& row : report.residuals) {
    out += students.external(row.student) + "," + courses.external(row.target) + "," +
           format_double(row.predicted_relative) + "," + format_double(row.actual_relative) +
           "," + row.predicted_letter + "," + row.actual_letter + "," +
           std::to_string(row.tick_error) + "\n";
  }
  return out;
}

std::string format_summary_table(const EvalReport& report, ModelKind kind) {
  char line[160];
  std::string out = "Model        RMSE    PTA0    PTA1    PTA2\n";
  std::snprintf(line, sizeof(line), "%-11s %.3f %7.1f %7.1f %7.1f\n",
                display_name(kind).c_str(), report.rmse, report.pta0, report.pta1, report.pta2);
  out += line;
  return out;
}

namespace {

// Regularized incomplete beta via the standard continued-fraction expansion.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::runtime_error("paired t-test needs equal-length inputs");
  const std::size_t n = a.size();
  if (n < 2) throw std::runtime_error("paired t-test needs at least two pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);

  TTestResult result;
  result.mean_diff = mean;
  result.dof = static_cast<int>(n - 1);
  if (var == 0.0) {
    result.t = (mean == 0.0) ? 0.0 : std::numeric_limits<double>::infinity() * (mean > 0 ? 1 : -1);
    result.p_value = (mean == 0.0) ? 1.0 : 0.0;
    return result;
  }
  result.t = mean / std::sqrt(var / static_cast<double>(n));
  const double dof = static_cast<double>(result.dof);
  result.p_value = ibeta(dof / 2.0, 0.5, dof / (dof + result.t * result.t));
  return result;
}

}  // namespace gradepred
