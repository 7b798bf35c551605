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

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gradepred/models.hpp"
#include "gradepred/text.hpp"

namespace gradepred {

namespace {
using json = nlohmann::ordered_json;
}

// Serializes every model family to one JSON container. nlohmann writes
// doubles in shortest-round-trip form, so parameters reload bit-exactly.
class CheckpointCodec {
 public:
  static json to_json(const GradeModel& model) {
    json j;
    j["format"] = "gradepred-checkpoint";
    j["version"] = 1;
    j["kind"] = to_string(model.kind());
    const ModelConfig& c = model.config();
    j["d"] = c.d;
    j["l"] = c.l;
    j["lambda"] = c.lambda;
    j["gamma"] = c.gamma;
    j["use_raw_grades"] = c.use_raw_grades;
    j["n_students"] = model.n_students();
    j["n_courses"] = model.n_courses();
    if (const auto* csr = dynamic_cast<const CsrModel*>(&model)) {
      j["csr_pair_keys"] = csr->pair_keys_;
      std::vector<std::int32_t> seen;
      for (std::size_t i = 0; i < csr->target_seen_.size(); ++i) {
        if (csr->target_seen_[i]) seen.push_back(static_cast<std::int32_t>(i));
      }
      j["csr_target_seen"] = seen;
      j["csr_global_mean"] = csr->global_mean_;
    }
    j["theta"] = model.params();
    return j;
  }

  static std::unique_ptr<GradeModel> from_json(const json& j) {
    ModelConfig config;
    config.kind = parse_model_kind(j.at("kind").get<std::string>());
    config.d = j.at("d").get<int>();
    config.l = j.at("l").get<int>();
    config.lambda = j.at("lambda").get<double>();
    config.gamma = j.at("gamma").get<double>();
    config.use_raw_grades = j.at("use_raw_grades").get<bool>();
    const int m = j.at("n_students").get<int>();
    const int n = j.at("n_courses").get<int>();

    std::unique_ptr<GradeModel> model;
    if (config.kind == ModelKind::csr) {
      auto csr = std::unique_ptr<CsrModel>(new CsrModel(config, m, n));
      csr->pair_keys_ = j.at("csr_pair_keys").get<std::vector<std::uint64_t>>();
      csr->pair_slots_.reserve(csr->pair_keys_.size());
      for (std::size_t i = 0; i < csr->pair_keys_.size(); ++i) {
        csr->pair_slots_.emplace(csr->pair_keys_[i], static_cast<std::uint32_t>(i));
      }
      for (std::int32_t c : j.at("csr_target_seen").get<std::vector<std::int32_t>>()) {
        csr->target_seen_[static_cast<std::size_t>(c)] = 1;
      }
      csr->global_mean_ = j.at("csr_global_mean").get<double>();
      csr->finish_layout();
      model = std::move(csr);
    } else {
      model = make_model(config, m, n, /*seed=*/0);
    }

    auto theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() != model->params().size()) {
      throw std::runtime_error("checkpoint parameter count mismatch");
    }
    model->params() = std::move(theta);
    return model;
  }
};

void save_checkpoint(const GradeModel& model, const std::vector<std::string>& student_ids,
                     const std::vector<std::string>& course_ids, const std::string& config_hash,
                     const std::string& path) {
  if (static_cast<int>(student_ids.size()) != model.n_students() ||
      static_cast<int>(course_ids.size()) != model.n_courses()) {
    throw std::runtime_error("checkpoint vocabulary sizes do not match the model");
  }
  json j = CheckpointCodec::to_json(model);
  j["students"] = student_ids;
  j["courses"] = course_ids;
  j["config_hash"] = config_hash;
  write_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": not a checkpoint file (" + e.what() + ")");
  }
  if (j.value("format", "") != "gradepred-checkpoint") {
    throw std::runtime_error(path + ": not a gradepred checkpoint");
  }
  Checkpoint ckpt;
  ckpt.model = CheckpointCodec::from_json(j);
  ckpt.student_ids = j.at("students").get<std::vector<std::string>>();
  ckpt.course_ids = j.at("courses").get<std::vector<std::string>>();
  ckpt.config_hash = j.at("config_hash").get<std::string>();
  return ckpt;
}

}  // namespace gradepred
