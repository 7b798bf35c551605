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
#include <memory>
#include <string>
#include <vector>

#include "gradepred/dataset.hpp"
#include "gradepred/models.hpp"

namespace gradepred {

struct TrainConfig {
  ModelKind model = ModelKind::nak_sparse;
  int d = 16;
  int l = 2;
  double alpha = 1e-7;          // L2 strength
  double learning_rate = 0.01;  // AdaGrad step size
  double lambda = 0.0;          // KRM time decay
  double gamma = 0.5;           // sparsegen strength
  int batch_size = 256;
  int epochs = 50;
  std::uint64_t seed = 1;
  bool use_raw_grades = false;

  ModelConfig model_config() const {
    return {model, d, l, lambda, gamma, use_raw_grades};
  }
};

// Config files are "key = value" lines; keys match the field names above
// ("model" takes mf|csr|krm_sum|krm_avg|nak_soft|nak_sparse). '#' starts a
// comment. Unknown keys are errors.
TrainConfig parse_train_config(const std::string& content);
TrainConfig load_train_config(const std::string& path);
std::string serialize_train_config(const TrainConfig& config);  // canonical form
std::string train_config_hash(const TrainConfig& config);       // FNV-1a over the canonical form

// (1/2N) sum of squared residuals + alpha * ||theta||^2 over every parameter.
double loss(const std::vector<PredictionInstance>& instances, const GradeModel& model,
            double alpha);

// Mean squared residual in the space the model trains in (the validation
// selection metric).
double mean_squared_error(const std::vector<PredictionInstance>& instances,
                          const GradeModel& model);

struct AdaGradState {
  std::vector<double> accum;  // per-parameter sum of squared gradients
  double epsilon = 1e-8;

  explicit AdaGradState(std::size_t n_params) : accum(n_params, 0.0) {}
};

// accum += g^2; param -= lr * g / (sqrt(accum) + epsilon). Entries sharing an
// index are merged before the update.
void adagrad_step(std::vector<double>& params, const GradVec& grads, AdaGradState& state,
                  double learning_rate);

// Mean of the per-instance gradient bundles plus the 2*alpha*theta L2 term on
// every parameter the batch touched, merged by index. This is the exact batch
// gradient the training loop feeds to AdaGrad.
GradVec batch_gradient(const GradeModel& model,
                       std::span<const PredictionInstance* const> batch, double alpha);

struct EpochStats {
  int epoch = 0;  // 0 is the untrained state
  double train_loss = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  std::unique_ptr<GradeModel> model;  // parameters from the best validation epoch
  std::vector<EpochStats> history;
  int best_epoch = 0;
};

// Shuffled minibatch AdaGrad for `epochs` epochs; returns the parameter
// snapshot from the epoch with the lowest validation MSE (train loss stands
// in when the validation set is empty). Deterministic per (config, split).
// Aborts with a diagnostic naming the epoch and batch if the loss goes
// non-finite.
TrainResult train(const TrainConfig& config, const Split& split);

// --- grid search ----------------------------------------------------------

struct GridSpec {
  std::vector<int> d, l, batch_size, epochs;
  std::vector<double> alpha, learning_rate, lambda, gamma;

  // Unset axes fall back to the standard sweep: d {8,16,32},
  // alpha {1e-5,1e-7,1e-3}, learning_rate {0.0007,0.001,0.003,0.005,0.007},
  // l 1..4, lambda {0,0.3,0.5,0.7,1.0}; gamma defaults to the template's
  // value. Axes that do not apply to the model kind are skipped.
  static GridSpec from_file(const std::string& path);
  static GridSpec from_string(const std::string& content);
};

struct GridResult {
  TrainConfig config;
  double val_mse = 0.0;
  int best_epoch = 0;
  std::string error;  // non-empty if this grid point failed

  bool ok() const { return error.empty(); }
};

// Trains every grid point (jobs > 1 runs them concurrently; the split is
// shared read-only) and returns results sorted by validation MSE ascending,
// failed points last. Per-point failures are captured, not propagated.
std::vector<GridResult> grid_search(const TrainConfig& base, const GridSpec& grids,
                                    const Split& split, int jobs = 1);

std::string format_history_csv(const std::vector<EpochStats>& history);
std::string format_grid_csv(const std::vector<GridResult>& results);

}  // namespace gradepred
