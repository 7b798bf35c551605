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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gradepred/activations.hpp"
#include "gradepred/types.hpp"

namespace gradepred {

enum class ModelKind { mf, csr, krm_sum, krm_avg, nak_soft, nak_sparse };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);
std::string display_name(ModelKind kind);  // "NAK(sparse)" etc., for report tables

// exp(-lambda * term_offset): de-emphasizes courses taken long ago.
double decay(int term_offset, double lambda);

// One gradient component, addressed into the model's flat parameter vector.
// A bundle may carry several entries for the same index; they accumulate.
struct GradEntry {
  std::uint32_t index = 0;
  double value = 0.0;
};
using GradVec = std::vector<GradEntry>;

struct ModelConfig {
  ModelKind kind = ModelKind::nak_sparse;
  int d = 16;           // course embedding size
  int l = 2;            // attention hidden size (NAK only)
  double lambda = 0.0;  // time decay (KRM only)
  double gamma = 0.5;   // sparsegen regularization strength (NAK(sparse) only)
  bool use_raw_grades = false;
};

// Common surface for all model families. Parameters live in one flat vector
// so the optimizer, regularizer, checkpointing, and finite-difference checks
// all address them uniformly.
//
// Forward prediction and gradient computation are pure given the parameters;
// a frozen model is safe for concurrent readers. Training mutates params()
// from a single thread.
class GradeModel {
 public:
  virtual ~GradeModel() = default;

  ModelKind kind() const { return kind_; }
  bool use_raw_grades() const { return config_.use_raw_grades; }
  const ModelConfig& config() const { return config_; }
  int n_students() const { return n_students_; }
  int n_courses() const { return n_courses_; }

  virtual double predict(const PredictionInstance& inst) const = 0;

  // Appends gradients of the per-instance term 0.5 * residual^2 (the L2 term
  // is the trainer's job) for every parameter the instance reads.
  // residual = predicted - actual.
  virtual void gradient(const PredictionInstance& inst, double residual,
                        GradVec& out) const = 0;

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  // Grade fields the model consumes: row-centered by default, raw when the
  // model was configured for actual-grade training.
  double prior_grade(const PriorCourse& p) const {
    return config_.use_raw_grades ? p.raw_grade : p.relative_grade;
  }
  double target_grade(const PredictionInstance& inst) const {
    return config_.use_raw_grades ? inst.target_raw_grade : inst.target_relative_grade;
  }

 protected:
  GradeModel(ModelKind kind, ModelConfig config, int n_students, int n_courses)
      : kind_(kind), config_(config), n_students_(n_students), n_courses_(n_courses) {}

  ModelKind kind_;
  ModelConfig config_;
  int n_students_ = 0;
  int n_courses_ = 0;
  std::vector<double> theta_;
};

// g_hat = mu + sb_s + cb_i + u_s . v_i. Student vectors are zero-initialized
// so students absent from training predict with sb = 0 and u = 0.
class MfModel final : public GradeModel {
 public:
  MfModel(const ModelConfig& config, int n_students, int n_courses, std::uint64_t seed);

  double predict(const PredictionInstance& inst) const override;
  void gradient(const PredictionInstance& inst, double residual, GradVec& out) const override;

  double mu() const { return theta_[0]; }
  double student_bias(StudentId s) const { return theta_[off_sb_ + s]; }
  double course_bias(CourseId c) const { return theta_[off_cb_ + c]; }
  std::span<const double> student_vec(StudentId s) const;
  std::span<const double> course_vec(CourseId c) const;
  std::span<double> student_vec(StudentId s);
  std::span<double> course_vec(CourseId c);
  double& mu_ref() { return theta_[0]; }
  double& student_bias_ref(StudentId s) { return theta_[off_sb_ + s]; }
  double& course_bias_ref(CourseId c) { return theta_[off_cb_ + c]; }

 private:
  friend class CheckpointCodec;
  std::size_t off_sb_ = 0, off_cb_ = 0, off_u_ = 0, off_v_ = 0;
};

// g_hat = cb_j + sum over priors with a learned (i, j) weight of w_ij * g_i.
// Weights exist only for (prior, target) pairs co-observed in the training
// instances; targets never seen in training predict the global mean of the
// training targets' grades.
class CsrModel final : public GradeModel {
 public:
  CsrModel(const ModelConfig& config, int n_students, int n_courses,
           const std::vector<PredictionInstance>& train_instances);

  double predict(const PredictionInstance& inst) const override;
  void gradient(const PredictionInstance& inst, double residual, GradVec& out) const override;

  double course_bias(CourseId c) const { return theta_[off_cb_ + c]; }
  // Slot of w_{prior,target} in the flat vector, or -1 if the pair was never
  // co-observed in training.
  std::int64_t weight_index(CourseId prior, CourseId target) const;
  double global_mean() const { return global_mean_; }
  bool target_seen(CourseId c) const { return target_seen_[static_cast<std::size_t>(c)] != 0; }
  std::size_t n_pairs() const { return pair_keys_.size(); }

 private:
  friend class CheckpointCodec;
  CsrModel(const ModelConfig& config, int n_students, int n_courses);  // for load
  void finish_layout();

  std::size_t off_cb_ = 0, off_w_ = 0;
  std::vector<std::uint64_t> pair_keys_;  // prior * n_courses + target, slot order
  std::unordered_map<std::uint64_t, std::uint32_t> pair_slots_;
  std::vector<char> target_seen_;
  double global_mean_ = 0.0;
};

// Knowledge state k = pool over priors of decay(offset, lambda) * g_i * p_i;
// g_hat = cb_j + k . r_j. Pooling is plain summation or the mean over priors.
class KrmModel final : public GradeModel {
 public:
  KrmModel(const ModelConfig& config, int n_students, int n_courses, std::uint64_t seed);

  double predict(const PredictionInstance& inst) const override;
  void gradient(const PredictionInstance& inst, double residual, GradVec& out) const override;

  std::vector<double> knowledge_state(const PredictionInstance& inst) const;
  bool mean_pooling() const { return kind_ == ModelKind::krm_avg; }
  double time_decay_lambda() const { return config_.lambda; }

  double course_bias(CourseId c) const { return theta_[off_cb_ + c]; }
  std::span<const double> provided(CourseId c) const;
  std::span<const double> required(CourseId c) const;
  std::span<double> provided(CourseId c);
  std::span<double> required(CourseId c);
  double& course_bias_ref(CourseId c) { return theta_[off_cb_ + c]; }

 private:
  friend class CheckpointCodec;
  void state_into(const PredictionInstance& inst, std::vector<double>& k) const;
  std::size_t off_cb_ = 0, off_p_ = 0, off_r_ = 0;
};

// Attention-weighted knowledge state. Per prior i: q_i = g_i * p_i, logit
// z_i = h . RELU(W (q_i o r_j) + b); attention = softmax or sparsegen over
// the flattened prior list (no time decay); k = sum_i a_i q_i;
// g_hat = cb_j + k . r_j.
class NakModel final : public GradeModel {
 public:
  NakModel(const ModelConfig& config, int n_students, int n_courses, std::uint64_t seed);

  double predict(const PredictionInstance& inst) const override;
  void gradient(const PredictionInstance& inst, double residual, GradVec& out) const override;

  std::vector<double> attention_logits(const PredictionInstance& inst) const;

  struct KnowledgeState {
    std::vector<double> k;
    ProbVector attention;
  };
  KnowledgeState knowledge_state(const PredictionInstance& inst) const;

  bool sparse_attention() const { return kind_ == ModelKind::nak_sparse; }
  double gamma() const { return config_.gamma; }
  int attention_dim() const { return config_.l; }

  double course_bias(CourseId c) const { return theta_[off_cb_ + c]; }
  std::span<const double> provided(CourseId c) const;
  std::span<const double> required(CourseId c) const;
  std::span<double> provided(CourseId c);
  std::span<double> required(CourseId c);
  std::span<const double> attn_w_row(int row) const;  // l rows of length d
  std::span<double> attn_w_row(int row);
  std::span<const double> attn_b() const;
  std::span<double> attn_b();
  std::span<const double> attn_h() const;
  std::span<double> attn_h();
  double& course_bias_ref(CourseId c) { return theta_[off_cb_ + c]; }

 private:
  friend class CheckpointCodec;
  struct Fwd;  // reusable forward-pass buffers (thread-local)
  static Fwd& fwd_scratch();
  double forward(const PredictionInstance& inst, Fwd& fwd) const;
  ProbVector attend(std::span<const double> logits) const;

  std::size_t off_cb_ = 0, off_p_ = 0, off_r_ = 0, off_w_ = 0, off_b_ = 0, off_h_ = 0;
};

// Builds a freshly-initialized model. Embeddings and attention weights are
// uniform in [-0.05/sqrt(d), 0.05/sqrt(d)] from the seed; biases and mu are
// zero; MF student vectors are zero. CSR requires the training instances to
// enumerate its learnable (prior, target) pairs.
std::unique_ptr<GradeModel> make_model(const ModelConfig& config, int n_students,
                                       int n_courses, std::uint64_t seed,
                                       const std::vector<PredictionInstance>* train_instances = nullptr);

// --- checkpoints ---------------------------------------------------------

struct Checkpoint {
  std::unique_ptr<GradeModel> model;
  std::vector<std::string> student_ids;  // handle order
  std::vector<std::string> course_ids;
  std::string config_hash;
};

// JSON container holding the model kind, dims, both vocabularies, the
// training config hash, and every parameter. Doubles are written in
// shortest-round-trip form, so save -> load -> predictions are bit-exact.
void save_checkpoint(const GradeModel& model, const std::vector<std::string>& student_ids,
                     const std::vector<std::string>& course_ids,
                     const std::string& config_hash, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gradepred
