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

#include "gradepred/rng.hpp"
#include "gradepred/training.hpp"
#include "support/oracles.hpp"

using namespace gradepred;

namespace {

IdTable table_of(int n, char prefix) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%04d", prefix, i);
    ids.push_back(buf);
  }
  return IdTable::from_ids(std::move(ids));
}

Split random_split(Rng& rng, int n_students, int n_courses, int n_train, int n_val) {
  Split split;
  split.students = table_of(n_students, 's');
  split.courses = table_of(n_courses, 'c');
  split.course_in_train.assign(static_cast<std::size_t>(n_courses), 1);
  for (int i = 0; i < n_train; ++i) {
    split.train.push_back(testutil::random_instance(rng, n_students, n_courses, 1, 6));
  }
  for (int i = 0; i < n_val; ++i) {
    split.validation.push_back(testutil::random_instance(rng, n_students, n_courses, 4, 6));
  }
  return split;
}

constexpr ModelKind kAllKinds[] = {ModelKind::mf,       ModelKind::csr,
                                   ModelKind::krm_sum,  ModelKind::krm_avg,
                                   ModelKind::nak_soft, ModelKind::nak_sparse};

}  // namespace

TEST_SUITE_BEGIN("training");

TEST_CASE("config parsing round trip") {
  TrainConfig c;
  c.model = ModelKind::krm_avg;
  c.d = 24;
  c.alpha = 1e-5;
  c.learning_rate = 0.004;
  c.lambda = 0.7;
  c.seed = 99;
  c.use_raw_grades = true;
  const TrainConfig parsed = parse_train_config(serialize_train_config(c));
  CHECK(parsed.model == c.model);
  CHECK(parsed.d == c.d);
  CHECK(parsed.alpha == c.alpha);
  CHECK(parsed.learning_rate == c.learning_rate);
  CHECK(parsed.lambda == c.lambda);
  CHECK(parsed.seed == c.seed);
  CHECK(parsed.use_raw_grades == c.use_raw_grades);
  CHECK(train_config_hash(parsed) == train_config_hash(c));
  CHECK(train_config_hash(parsed).size() == 16);

  TrainConfig other = c;
  other.learning_rate = 0.005;
  CHECK(train_config_hash(other) != train_config_hash(c));
}

TEST_CASE("config rejects bad input") {
  CHECK_THROWS_WITH_AS(parse_train_config("bogus_key = 1\n"),
                       doctest::Contains("unknown key"), std::runtime_error);
  CHECK_THROWS(parse_train_config("model = nak_sparse\ngamma = 1.0\n"));
  CHECK_THROWS(parse_train_config("batch_size = 0\n"));
  CHECK_THROWS(parse_train_config("learning_rate = 0\n"));
  CHECK_THROWS(parse_train_config("d = 8\nd = 16\n"));  // duplicate key
  CHECK_NOTHROW(parse_train_config("# comment only\n\n"));
}

TEST_CASE("loss worked examples") {
  Rng rng(3);
  Split split = random_split(rng, 3, 5, 2, 0);
  MfModel model(ModelConfig{ModelKind::mf, 2, 1, 0.0, 0.5, false}, 3, 5, 1);
  for (double& v : model.params()) v = 0.0;

  SUBCASE("perfect predictions, alpha 0") {
    split.train[0].target_relative_grade = 0.0;
    split.train[1].target_relative_grade = 0.0;
    CHECK(loss(split.train, model, 0.0) == 0.0);
  }
  SUBCASE("residuals 1 and -1, alpha 0") {
    split.train[0].target_relative_grade = -1.0;  // residual 0 - (-1) = 1
    split.train[1].target_relative_grade = 1.0;   // residual -1
    CHECK(loss(split.train, model, 0.0) == doctest::Approx(0.5));
  }
  SUBCASE("regularization adds alpha times the squared norm") {
    split.train[0].target_relative_grade = 0.0;
    split.train[1].target_relative_grade = 0.0;
    // A parameter the instances never read still counts toward the penalty.
    model.course_bias_ref(4) = 2.0;
    CHECK(loss(split.train, model, 0.1) == doctest::Approx(0.4));
  }
  CHECK_THROWS(loss({}, model, 0.0));
}

TEST_CASE("adagrad step") {
  std::vector<double> params = {1.0, -2.0, 0.5};
  AdaGradState state(params.size());

  SUBCASE("zero gradient is a no-op") {
    adagrad_step(params, {{0, 0.0}, {2, 0.0}}, state, 0.1);
    CHECK(params == std::vector<double>{1.0, -2.0, 0.5});
    CHECK(state.accum == std::vector<double>{0.0, 0.0, 0.0});
  }

  SUBCASE("first step is roughly a signed learning rate") {
    adagrad_step(params, {{1, 0.4}}, state, 0.1);
    CHECK(params[1] == doctest::Approx(-2.0 - 0.1 * 0.4 / (0.4 + 1e-8)).epsilon(1e-12));
    CHECK(state.accum[1] == doctest::Approx(0.16));
  }

  SUBCASE("second identical step is smaller") {
    adagrad_step(params, {{0, 0.5}}, state, 0.1);
    const double first_move = 1.0 - params[0];
    adagrad_step(params, {{0, 0.5}}, state, 0.1);
    const double second_move = (1.0 - first_move) - params[0];
    CHECK(second_move > 0.0);
    CHECK(second_move < first_move);
  }

  SUBCASE("duplicate indices merge before the update") {
    adagrad_step(params, {{0, 0.3}, {0, 0.2}}, state, 0.1);
    std::vector<double> expected = {1.0, -2.0, 0.5};
    AdaGradState expected_state(3);
    adagrad_step(expected, {{0, 0.5}}, expected_state, 0.1);
    CHECK(params[0] == expected[0]);
    CHECK(state.accum[0] == expected_state.accum[0]);
  }
}

TEST_CASE("zero learning rate leaves parameters at initialization") {
  Rng rng(17);
  const Split split = random_split(rng, 4, 6, 20, 5);
  TrainConfig config;
  config.model = ModelKind::krm_sum;
  config.d = 4;
  config.learning_rate = 1e-300;  // effectively zero; the config requires > 0
  config.epochs = 3;
  config.seed = 5;
  const TrainResult result = train(config, split);
  const auto fresh = make_model(config.model_config(), 4, 6, config.seed);
  for (std::size_t i = 0; i < fresh->params().size(); ++i) {
    CHECK(result.model->params()[i] == doctest::Approx(fresh->params()[i]).epsilon(1e-12));
  }
}

TEST_CASE("training is bit-reproducible per seed") {
  Rng rng(19);
  const Split split = random_split(rng, 4, 6, 40, 8);
  TrainConfig config;
  config.model = ModelKind::nak_sparse;
  config.d = 4;
  config.l = 2;
  config.epochs = 4;
  config.batch_size = 8;
  config.learning_rate = 0.02;
  config.seed = 21;

  const TrainResult a = train(config, split);
  const TrainResult b = train(config, split);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);  // bitwise
    CHECK(a.history[i].val_mse == b.history[i].val_mse);
  }
  CHECK(a.model->params() == b.model->params());
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("full-batch descent does not increase the loss over the first steps") {
  Rng rng(23);
  for (ModelKind kind : kAllKinds) {
    CAPTURE(to_string(kind));
    const Split split = random_split(rng, 4, 6, 24, 0);
    TrainConfig config;
    config.model = kind;
    config.d = 4;
    config.l = 2;
    config.alpha = 0.0;
    config.learning_rate = 1e-4;
    config.batch_size = static_cast<int>(split.train.size());
    config.epochs = 5;
    config.seed = 31;
    const TrainResult result = train(config, split);
    for (std::size_t i = 1; i < result.history.size(); ++i) {
      CHECK(result.history[i].train_loss <= result.history[i - 1].train_loss + 1e-12);
    }
  }
}

TEST_CASE("full-batch gradient equals the analytic gradient of the loss") {
  Rng rng(29);
  for (ModelKind kind : kAllKinds) {
    CAPTURE(to_string(kind));
    Split split = random_split(rng, 3, 5, 12, 0);
    auto model = make_model(ModelConfig{kind, 3, 2, 0.2, 0.4, false}, 3, 5, 7, &split.train);
    testutil::randomize_params(*model, rng, 0.4);
    if (kind == ModelKind::nak_sparse) {
      // Keep clear of projection kinks so finite differences are valid.
      bool generic = true;
      auto* nak = dynamic_cast<NakModel*>(model.get());
      for (const PredictionInstance& inst : split.train) {
        std::vector<double> scaled = nak->attention_logits(inst);
        for (double& v : scaled) v /= (1.0 - nak->gamma());
        if (scaled.size() > 1 && testutil::sparsemax_kink_distance(scaled) < 1e-3) {
          generic = false;
        }
      }
      if (!generic) continue;
    }

    std::vector<const PredictionInstance*> batch;
    for (const PredictionInstance& inst : split.train) batch.push_back(&inst);
    const double alpha = 0.05;
    const GradVec grads = batch_gradient(*model, batch, alpha);

    auto loss_fn = [&]() { return loss(split.train, *model, alpha); };
    for (const GradEntry& e : grads) {
      const double numeric =
          testutil::central_diff(loss_fn, model->params()[e.index], 1e-5);
      CHECK_MESSAGE(testutil::grad_close(e.value, numeric), to_string(kind), " param ",
                    e.index, ": batch ", e.value, " vs numeric ", numeric);
    }
  }
}

TEST_CASE("csr fit recovers a planted linear model") {
  // Data generated exactly from known pair weights and biases, zero noise.
  Rng rng(37);
  const int n_courses = 6;
  std::vector<double> true_cb = {0.1, -0.2, 0.3, 0.0, 0.15, -0.05};
  std::vector<std::vector<double>> true_w(n_courses, std::vector<double>(n_courses, 0.0));
  for (int i = 0; i < n_courses; ++i) {
    for (int j = 0; j < n_courses; ++j) {
      if (i != j) true_w[i][j] = rng.uniform(-0.5, 0.5);
    }
  }

  Split split;
  split.students = table_of(4, 's');
  split.courses = table_of(n_courses, 'c');
  split.course_in_train.assign(n_courses, 1);
  for (int i = 0; i < 400; ++i) {
    PredictionInstance inst = testutil::random_instance(rng, 4, n_courses, 2, 4);
    double target = true_cb[static_cast<std::size_t>(inst.target_course)];
    for (const PriorCourse& p : inst.priors) {
      target += true_w[static_cast<std::size_t>(p.course)]
                      [static_cast<std::size_t>(inst.target_course)] *
                p.relative_grade;
    }
    inst.target_relative_grade = target;
    inst.target_raw_grade = target + inst.prior_mean;
    split.train.push_back(std::move(inst));
  }

  TrainConfig config;
  config.model = ModelKind::csr;
  config.alpha = 0.0;
  config.learning_rate = 0.3;
  config.batch_size = 40;
  config.epochs = 400;
  config.seed = 11;
  const TrainResult result = train(config, split);

  double sq = 0.0;
  for (const PredictionInstance& inst : split.train) {
    const double r = result.model->predict(inst) - inst.target_relative_grade;
    sq += r * r;
  }
  CHECK(std::sqrt(sq / static_cast<double>(split.train.size())) < 1e-3);
}

TEST_CASE("grid search") {
  Rng rng(41);
  const Split split = random_split(rng, 3, 5, 30, 8);
  TrainConfig base;
  base.model = ModelKind::krm_avg;
  base.d = 4;
  base.epochs = 3;
  base.batch_size = 8;
  base.learning_rate = 0.01;
  base.seed = 13;

  SUBCASE("a single grid point reproduces train()") {
    GridSpec spec;
    spec.d = {4};
    spec.alpha = {1e-5};
    spec.learning_rate = {0.01};
    spec.lambda = {0.0};
    const auto results = grid_search(base, spec, split);
    REQUIRE(results.size() == 1);
    CHECK(results[0].ok());
    TrainConfig expect = base;
    expect.alpha = 1e-5;
    const TrainResult direct = train(expect, split);
    CHECK(results[0].val_mse ==
          direct.history[static_cast<std::size_t>(direct.best_epoch)].val_mse);
  }

  SUBCASE("results come back sorted by validation mse") {
    GridSpec spec;
    spec.d = {2, 4};
    spec.alpha = {1e-5};
    spec.learning_rate = {0.01, 0.02};
    spec.lambda = {0.0};
    const auto results = grid_search(base, spec, split, /*jobs=*/2);
    REQUIRE(results.size() == 4);
    for (std::size_t i = 1; i < results.size(); ++i) {
      CHECK(results[i - 1].val_mse <= results[i].val_mse);
    }
    // Concurrency must not change the outcome.
    const auto serial = grid_search(base, spec, split, /*jobs=*/1);
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(results[i].val_mse == serial[i].val_mse);
    }
  }

  SUBCASE("per-point failures are annotated, not fatal") {
    TrainConfig nak = base;
    nak.model = ModelKind::nak_sparse;
    GridSpec spec;
    spec.d = {4};
    spec.l = {2};
    spec.alpha = {1e-5};
    spec.learning_rate = {0.01};
    spec.gamma = {0.5, 1.5};  // the second point is invalid
    const auto results = grid_search(nak, spec, split);
    REQUIRE(results.size() == 2);
    CHECK(results[0].ok());
    CHECK_FALSE(results[1].ok());
    CHECK(results[1].error.find("gamma") != std::string::npos);
    const std::string csv = format_grid_csv(results);
    CHECK(csv.find("ok") != std::string::npos);
    CHECK(csv.rfind("gamma") != std::string::npos);
  }
}

TEST_CASE("history csv format") {
  std::vector<EpochStats> history = {{0, 1.5, 2.25}, {1, 0.75, 1.0}};
  CHECK(format_history_csv(history) == "epoch,train_loss,val_mse\n0,1.5,2.25\n1,0.75,1\n");
}

TEST_SUITE_END();
