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

#include "gradepred/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "gradepred/rng.hpp"
#include "gradepred/text.hpp"

namespace gradepred {

namespace {

std::unordered_map<std::string, std::string> parse_kv(const std::string& content,
                                                      const char* what) {
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
      throw std::runtime_error(std::string(what) + " line " + std::to_string(lineno) +
                               ": want 'key = value'");
    }
    const std::string key(trim(t.substr(0, eq)));
    const std::string value(trim(t.substr(eq + 1)));
    if (key.empty() || value.empty()) {
      throw std::runtime_error(std::string(what) + " line " + std::to_string(lineno) +
                               ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw std::runtime_error(std::string(what) + " line " + std::to_string(lineno) +
                               ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("bad boolean for '" + key + "': " + v);
}

void validate_config(const TrainConfig& c) {
  if (c.d < 1) throw std::runtime_error("config: d must be >= 1");
  if (c.l < 1) throw std::runtime_error("config: l must be >= 1");
  if (c.alpha < 0.0) throw std::runtime_error("config: alpha must be >= 0");
  if (!(c.learning_rate > 0.0)) throw std::runtime_error("config: learning_rate must be > 0");
  if (c.lambda < 0.0) throw std::runtime_error("config: lambda must be >= 0");
  if (!(c.gamma < 1.0)) throw std::runtime_error("config: gamma must be < 1");
  if (c.batch_size < 1) throw std::runtime_error("config: batch_size must be >= 1");
  if (c.epochs < 1) throw std::runtime_error("config: epochs must be >= 1");
}

}  // namespace

TrainConfig parse_train_config(const std::string& content) {
  TrainConfig c;
  for (const auto& [key, value] : parse_kv(content, "config")) {
    if (key == "model") c.model = parse_model_kind(value);
    else if (key == "d") c.d = static_cast<int>(parse_int(value, key));
    else if (key == "l") c.l = static_cast<int>(parse_int(value, key));
    else if (key == "alpha") c.alpha = parse_double(value, key);
    else if (key == "learning_rate") c.learning_rate = parse_double(value, key);
    else if (key == "lambda") c.lambda = parse_double(value, key);
    else if (key == "gamma") c.gamma = parse_double(value, key);
    else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(value, key));
    else if (key == "epochs") c.epochs = static_cast<int>(parse_int(value, key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "use_raw_grades") c.use_raw_grades = parse_bool(value, key);
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
  validate_config(c);
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  return parse_train_config(read_file(path));
}

std::string serialize_train_config(const TrainConfig& c) {
  std::string out;
  out += "model = " + to_string(c.model) + "\n";
  out += "d = " + std::to_string(c.d) + "\n";
  out += "l = " + std::to_string(c.l) + "\n";
  out += "alpha = " + format_double(c.alpha) + "\n";
  out += "learning_rate = " + format_double(c.learning_rate) + "\n";
  out += "lambda = " + format_double(c.lambda) + "\n";
  out += "gamma = " + format_double(c.gamma) + "\n";
  out += "batch_size = " + std::to_string(c.batch_size) + "\n";
  out += "epochs = " + std::to_string(c.epochs) + "\n";
  out += "seed = " + std::to_string(c.seed) + "\n";
  out += "use_raw_grades = " + std::string(c.use_raw_grades ? "true" : "false") + "\n";
  return out;
}

std::string train_config_hash(const TrainConfig& c) {
  const std::string s = serialize_train_config(c);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double loss(const std::vector<PredictionInstance>& instances, const GradeModel& model,
            double alpha) {
  if (instances.empty()) throw std::runtime_error("loss over empty instance set");
  double sq = 0.0;
  for (const PredictionInstance& inst : instances) {
    const double r = model.predict(inst) - model.target_grade(inst);
    sq += r * r;
  }
  double reg = 0.0;
  for (double v : model.params()) reg += v * v;
  return sq / (2.0 * static_cast<double>(instances.size())) + alpha * reg;
}

double mean_squared_error(const std::vector<PredictionInstance>& instances,
                          const GradeModel& model) {
  if (instances.empty()) throw std::runtime_error("mse over empty instance set");
  double sq = 0.0;
  for (const PredictionInstance& inst : instances) {
    const double r = model.predict(inst) - model.target_grade(inst);
    sq += r * r;
  }
  return sq / static_cast<double>(instances.size());
}

void adagrad_step(std::vector<double>& params, const GradVec& grads, AdaGradState& state,
                  double learning_rate) {
  if (state.accum.size() != params.size()) {
    throw std::runtime_error("adagrad state size mismatch");
  }
  GradVec merged = grads;
  std::sort(merged.begin(), merged.end(),
            [](const GradEntry& a, const GradEntry& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < merged.size();) {
    const std::uint32_t index = merged[i].index;
    double g = 0.0;
    while (i < merged.size() && merged[i].index == index) {
      g += merged[i].value;
      ++i;
    }
    state.accum[index] += g * g;
    params[index] -= learning_rate * g / (std::sqrt(state.accum[index]) + state.epsilon);
  }
}

GradVec batch_gradient(const GradeModel& model,
                       std::span<const PredictionInstance* const> batch, double alpha) {
  if (batch.empty()) throw std::runtime_error("empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::unordered_map<std::uint32_t, double> acc;
  GradVec scratch;
  for (const PredictionInstance* inst : batch) {
    const double residual = model.predict(*inst) - model.target_grade(*inst);
    scratch.clear();
    model.gradient(*inst, residual, scratch);
    for (const GradEntry& e : scratch) acc[e.index] += e.value * inv_b;
  }
  const std::vector<double>& theta = model.params();
  GradVec out;
  out.reserve(acc.size());
  for (auto& [index, g] : acc) {
    out.push_back({index, g + 2.0 * alpha * theta[index]});
  }
  std::sort(out.begin(), out.end(),
            [](const GradEntry& a, const GradEntry& b) { return a.index < b.index; });
  return out;
}

TrainResult train(const TrainConfig& config, const Split& split) {
  validate_config(config);
  if (split.train.empty()) throw std::runtime_error("train called with an empty training set");

  TrainResult result;
  result.model = make_model(config.model_config(), split.students.size(), split.courses.size(),
                            config.seed, &split.train);
  GradeModel& model = *result.model;
  AdaGradState state(model.params().size());
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ull);  // shuffle stream, distinct from init

  auto val_metric = [&]() {
    return split.validation.empty() ? loss(split.train, model, config.alpha)
                                    : mean_squared_error(split.validation, model);
  };

  result.history.push_back({0, loss(split.train, model, config.alpha), val_metric()});
  double best = result.history[0].val_mse;
  std::vector<double> best_theta = model.params();
  result.best_epoch = 0;

  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const PredictionInstance*> batch;
  batch.reserve(static_cast<std::size_t>(config.batch_size));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    const std::size_t n = order.size();
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&split.train[order[i]]);

      double batch_sq = 0.0;
      for (const PredictionInstance* inst : batch) {
        const double r = model.predict(*inst) - model.target_grade(*inst);
        batch_sq += r * r;
      }
      if (!std::isfinite(batch_sq)) {
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index) +
                                 " (try a smaller learning_rate)");
      }
      adagrad_step(model.params(), batch_gradient(model, batch, config.alpha), state,
                   config.learning_rate);
      ++batch_index;
    }

    EpochStats stats{epoch, loss(split.train, model, config.alpha), val_metric()};
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_mse)) {
      throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                               " (end of epoch)");
    }
    result.history.push_back(stats);
    if (stats.val_mse < best) {
      best = stats.val_mse;
      best_theta = model.params();
      result.best_epoch = epoch;
    }
  }

  model.params() = std::move(best_theta);
  return result;
}

// --- grid search ------------------------------------------------------------

GridSpec GridSpec::from_string(const std::string& content) {
  GridSpec spec;
  for (const auto& [key, value] : parse_kv(content, "grids")) {
    const auto tokens = split(value, ',');
    auto doubles = [&](std::vector<double>& out) {
      for (const auto& t : tokens) out.push_back(parse_double(t, key));
    };
    auto ints = [&](std::vector<int>& out) {
      for (const auto& t : tokens) out.push_back(static_cast<int>(parse_int(t, key)));
    };
    if (key == "d") ints(spec.d);
    else if (key == "l") ints(spec.l);
    else if (key == "batch_size") ints(spec.batch_size);
    else if (key == "epochs") ints(spec.epochs);
    else if (key == "alpha") doubles(spec.alpha);
    else if (key == "learning_rate") doubles(spec.learning_rate);
    else if (key == "lambda") doubles(spec.lambda);
    else if (key == "gamma") doubles(spec.gamma);
    else throw std::runtime_error("grids: unknown key '" + key + "'");
  }
  return spec;
}

GridSpec GridSpec::from_file(const std::string& path) {
  return GridSpec::from_string(read_file(path));
}

namespace {

bool uses_embeddings(ModelKind k) { return k != ModelKind::csr; }
bool uses_attention(ModelKind k) {
  return k == ModelKind::nak_soft || k == ModelKind::nak_sparse;
}
bool uses_decay(ModelKind k) { return k == ModelKind::krm_sum || k == ModelKind::krm_avg; }

std::vector<TrainConfig> expand_grid(const TrainConfig& base, const GridSpec& spec) {
  const ModelKind kind = base.model;
  std::vector<int> ds = spec.d.empty() ? std::vector<int>{8, 16, 32} : spec.d;
  std::vector<double> alphas = spec.alpha.empty() ? std::vector<double>{1e-5, 1e-7, 1e-3}
                                                  : spec.alpha;
  std::vector<double> lrs = spec.learning_rate.empty()
                                ? std::vector<double>{0.0007, 0.001, 0.003, 0.005, 0.007}
                                : spec.learning_rate;
  std::vector<int> ls = spec.l.empty() ? std::vector<int>{1, 2, 3, 4} : spec.l;
  std::vector<double> lambdas =
      spec.lambda.empty() ? std::vector<double>{0.0, 0.3, 0.5, 0.7, 1.0} : spec.lambda;
  std::vector<double> gammas = spec.gamma.empty() ? std::vector<double>{base.gamma} : spec.gamma;
  std::vector<int> batches =
      spec.batch_size.empty() ? std::vector<int>{base.batch_size} : spec.batch_size;
  std::vector<int> epoch_counts = spec.epochs.empty() ? std::vector<int>{base.epochs} : spec.epochs;

  if (!uses_embeddings(kind)) ds = {base.d};
  if (!uses_attention(kind)) ls = {base.l};
  if (kind != ModelKind::nak_sparse) gammas = {base.gamma};
  if (!uses_decay(kind)) lambdas = {base.lambda};

  std::vector<TrainConfig> configs;
  for (int d : ds)
    for (double alpha : alphas)
      for (double lr : lrs)
        for (int l : ls)
          for (double lambda : lambdas)
            for (double gamma : gammas)
              for (int bs : batches)
                for (int ep : epoch_counts) {
                  TrainConfig c = base;
                  c.d = d;
                  c.alpha = alpha;
                  c.learning_rate = lr;
                  c.l = l;
                  c.lambda = lambda;
                  c.gamma = gamma;
                  c.batch_size = bs;
                  c.epochs = ep;
                  configs.push_back(c);
                }
  return configs;
}

}  // namespace

std::vector<GridResult> grid_search(const TrainConfig& base, const GridSpec& grids,
                                    const Split& split, int jobs) {
  const std::vector<TrainConfig> configs = expand_grid(base, grids);
  if (configs.empty()) throw std::runtime_error("empty grid");
  std::vector<GridResult> results(configs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) break;
      results[i].config = configs[i];
      try {
        TrainResult r = train(configs[i], split);
        results[i].val_mse =
            r.history[static_cast<std::size_t>(r.best_epoch)].val_mse;
        results[i].best_epoch = r.best_epoch;
      } catch (const std::exception& e) {
        results[i].error = e.what();
        results[i].val_mse = std::numeric_limits<double>::infinity();
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
    if (a.ok() != b.ok()) return a.ok();
    return a.val_mse < b.val_mse;
  });
  return results;
}

std::string format_history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_loss,val_mse\n";
  for (const EpochStats& e : history) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           format_double(e.val_mse) + "\n";
  }
  return out;
}

std::string format_grid_csv(const std::vector<GridResult>& results) {
  std::string out =
      "rank,model,d,l,alpha,learning_rate,lambda,gamma,batch_size,epochs,seed,val_mse,"
      "best_epoch,status\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const GridResult& r = results[i];
    const TrainConfig& c = r.config;
    std::string status = r.ok() ? "ok" : r.error;
    std::replace(status.begin(), status.end(), ',', ';');
    out += std::to_string(i + 1) + "," + to_string(c.model) + "," + std::to_string(c.d) + "," +
           std::to_string(c.l) + "," + format_double(c.alpha) + "," +
           format_double(c.learning_rate) + "," + format_double(c.lambda) + "," +
           format_double(c.gamma) + "," + std::to_string(c.batch_size) + "," +
           std::to_string(c.epochs) + "," + std::to_string(c.seed) + "," +
           (r.ok() ? format_double(r.val_mse) : "nan") + "," + std::to_string(r.best_epoch) +
           "," + status + "\n";
  }
  return out;
}

}  // namespace gradepred
