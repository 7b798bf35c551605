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

#include "gradepred/models.hpp"

#include <cmath>
#include <stdexcept>

#include "gradepred/rng.hpp"

namespace gradepred {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void fill_uniform(std::span<double> out, Rng& rng, double half_width) {
  for (double& v : out) v = rng.uniform(-half_width, half_width);
}

void require_priors(const PredictionInstance& inst) {
  if (inst.priors.empty()) {
    throw std::runtime_error("instance has no prior courses (filtered upstream)");
  }
}

std::uint32_t idx(std::size_t base, std::size_t offset = 0) {
  return static_cast<std::uint32_t>(base + offset);
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "mf") return ModelKind::mf;
  if (name == "csr") return ModelKind::csr;
  if (name == "krm_sum") return ModelKind::krm_sum;
  if (name == "krm_avg") return ModelKind::krm_avg;
  if (name == "nak_soft") return ModelKind::nak_soft;
  if (name == "nak_sparse") return ModelKind::nak_sparse;
  throw std::runtime_error("unknown model kind '" + name +
                           "' (want mf|csr|krm_sum|krm_avg|nak_soft|nak_sparse)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::mf: return "mf";
    case ModelKind::csr: return "csr";
    case ModelKind::krm_sum: return "krm_sum";
    case ModelKind::krm_avg: return "krm_avg";
    case ModelKind::nak_soft: return "nak_soft";
    case ModelKind::nak_sparse: return "nak_sparse";
  }
  throw std::runtime_error("bad model kind");
}

std::string display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::mf: return "MF";
    case ModelKind::csr: return "CSR";
    case ModelKind::krm_sum: return "KRM(sum)";
    case ModelKind::krm_avg: return "KRM(avg)";
    case ModelKind::nak_soft: return "NAK(soft)";
    case ModelKind::nak_sparse: return "NAK(sparse)";
  }
  throw std::runtime_error("bad model kind");
}

double decay(int term_offset, double lambda) {
  return std::exp(-lambda * static_cast<double>(term_offset));
}

// --- MF --------------------------------------------------------------------

MfModel::MfModel(const ModelConfig& config, int n_students, int n_courses, std::uint64_t seed)
    : GradeModel(ModelKind::mf, config, n_students, n_courses) {
  if (config.d < 1) throw std::runtime_error("mf needs d >= 1");
  const std::size_t m = static_cast<std::size_t>(n_students);
  const std::size_t n = static_cast<std::size_t>(n_courses);
  const std::size_t d = static_cast<std::size_t>(config.d);
  off_sb_ = 1;
  off_cb_ = off_sb_ + m;
  off_u_ = off_cb_ + n;
  off_v_ = off_u_ + m * d;
  theta_.assign(off_v_ + n * d, 0.0);

  // Student vectors stay zero so untrained students predict mu + cb.
  Rng rng(seed);
  fill_uniform(std::span<double>(theta_).subspan(off_v_, n * d), rng,
               0.05 / std::sqrt(static_cast<double>(d)));
}

std::span<const double> MfModel::student_vec(StudentId s) const {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<const double>(theta_).subspan(off_u_ + static_cast<std::size_t>(s) * d, d);
}
std::span<const double> MfModel::course_vec(CourseId c) const {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<const double>(theta_).subspan(off_v_ + static_cast<std::size_t>(c) * d, d);
}
std::span<double> MfModel::student_vec(StudentId s) {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<double>(theta_).subspan(off_u_ + static_cast<std::size_t>(s) * d, d);
}
std::span<double> MfModel::course_vec(CourseId c) {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<double>(theta_).subspan(off_v_ + static_cast<std::size_t>(c) * d, d);
}

double MfModel::predict(const PredictionInstance& inst) const {
  return mu() + student_bias(inst.student) + course_bias(inst.target_course) +
         dot(student_vec(inst.student), course_vec(inst.target_course));
}

void MfModel::gradient(const PredictionInstance& inst, double residual, GradVec& out) const {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  const std::size_t s = static_cast<std::size_t>(inst.student);
  const std::size_t c = static_cast<std::size_t>(inst.target_course);
  out.push_back({0, residual});
  out.push_back({idx(off_sb_, s), residual});
  out.push_back({idx(off_cb_, c), residual});
  const std::span<const double> u = student_vec(inst.student);
  const std::span<const double> v = course_vec(inst.target_course);
  for (std::size_t j = 0; j < d; ++j) {
    out.push_back({idx(off_u_ + s * d, j), residual * v[j]});
    out.push_back({idx(off_v_ + c * d, j), residual * u[j]});
  }
}

// --- CSR -------------------------------------------------------------------

CsrModel::CsrModel(const ModelConfig& config, int n_students, int n_courses)
    : GradeModel(ModelKind::csr, config, n_students, n_courses) {
  target_seen_.assign(static_cast<std::size_t>(n_courses), 0);
}

CsrModel::CsrModel(const ModelConfig& config, int n_students, int n_courses,
                   const std::vector<PredictionInstance>& train_instances)
    : CsrModel(config, n_students, n_courses) {
  const std::uint64_t n = static_cast<std::uint64_t>(n_courses);
  double grade_sum = 0.0;
  for (const PredictionInstance& inst : train_instances) {
    target_seen_[static_cast<std::size_t>(inst.target_course)] = 1;
    grade_sum += target_grade(inst);
    for (const PriorCourse& p : inst.priors) {
      const std::uint64_t key =
          static_cast<std::uint64_t>(p.course) * n + static_cast<std::uint64_t>(inst.target_course);
      if (pair_slots_.emplace(key, static_cast<std::uint32_t>(pair_keys_.size())).second) {
        pair_keys_.push_back(key);
      }
    }
  }
  global_mean_ = train_instances.empty() ? 0.0 : grade_sum / train_instances.size();
  finish_layout();
}

void CsrModel::finish_layout() {
  off_cb_ = 0;
  off_w_ = static_cast<std::size_t>(n_courses_);
  theta_.assign(off_w_ + pair_keys_.size(), 0.0);
}

std::int64_t CsrModel::weight_index(CourseId prior, CourseId target) const {
  const std::uint64_t key = static_cast<std::uint64_t>(prior) *
                                static_cast<std::uint64_t>(n_courses_) +
                            static_cast<std::uint64_t>(target);
  auto it = pair_slots_.find(key);
  if (it == pair_slots_.end()) return -1;
  return static_cast<std::int64_t>(off_w_ + it->second);
}

double CsrModel::predict(const PredictionInstance& inst) const {
  if (!target_seen(inst.target_course)) {
    return global_mean_;
  }
  double sum = course_bias(inst.target_course);
  for (const PriorCourse& p : inst.priors) {
    const std::int64_t slot = weight_index(p.course, inst.target_course);
    if (slot >= 0) sum += theta_[static_cast<std::size_t>(slot)] * prior_grade(p);
  }
  return sum;
}

void CsrModel::gradient(const PredictionInstance& inst, double residual, GradVec& out) const {
  if (!target_seen(inst.target_course)) return;  // constant prediction
  out.push_back({idx(off_cb_, static_cast<std::size_t>(inst.target_course)), residual});
  for (const PriorCourse& p : inst.priors) {
    const std::int64_t slot = weight_index(p.course, inst.target_course);
    if (slot >= 0) {
      out.push_back({static_cast<std::uint32_t>(slot), residual * prior_grade(p)});
    }
  }
}

// --- KRM -------------------------------------------------------------------

KrmModel::KrmModel(const ModelConfig& config, int n_students, int n_courses, std::uint64_t seed)
    : GradeModel(config.kind, config, n_students, n_courses) {
  if (config.kind != ModelKind::krm_sum && config.kind != ModelKind::krm_avg) {
    throw std::runtime_error("KrmModel requires a krm kind");
  }
  if (config.d < 1) throw std::runtime_error("krm needs d >= 1");
  if (config.lambda < 0.0) throw std::runtime_error("krm lambda must be >= 0");
  const std::size_t n = static_cast<std::size_t>(n_courses);
  const std::size_t d = static_cast<std::size_t>(config.d);
  off_cb_ = 0;
  off_p_ = n;
  off_r_ = off_p_ + n * d;
  theta_.assign(off_r_ + n * d, 0.0);

  Rng rng(seed);
  const double hw = 0.05 / std::sqrt(static_cast<double>(d));
  fill_uniform(std::span<double>(theta_).subspan(off_p_, n * d), rng, hw);
  fill_uniform(std::span<double>(theta_).subspan(off_r_, n * d), rng, hw);
}

std::span<const double> KrmModel::provided(CourseId c) const {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<const double>(theta_).subspan(off_p_ + static_cast<std::size_t>(c) * d, d);
}
std::span<const double> KrmModel::required(CourseId c) const {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<const double>(theta_).subspan(off_r_ + static_cast<std::size_t>(c) * d, d);
}
std::span<double> KrmModel::provided(CourseId c) {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<double>(theta_).subspan(off_p_ + static_cast<std::size_t>(c) * d, d);
}
std::span<double> KrmModel::required(CourseId c) {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<double>(theta_).subspan(off_r_ + static_cast<std::size_t>(c) * d, d);
}

void KrmModel::state_into(const PredictionInstance& inst, std::vector<double>& k) const {
  require_priors(inst);
  const std::size_t d = static_cast<std::size_t>(config_.d);
  k.assign(d, 0.0);
  for (const PriorCourse& p : inst.priors) {
    const double w = decay(p.term_offset, config_.lambda) * prior_grade(p);
    const std::span<const double> pi = provided(p.course);
    for (std::size_t j = 0; j < d; ++j) k[j] += w * pi[j];
  }
  if (mean_pooling()) {
    for (double& v : k) v /= static_cast<double>(inst.priors.size());
  }
}

std::vector<double> KrmModel::knowledge_state(const PredictionInstance& inst) const {
  std::vector<double> k;
  state_into(inst, k);
  return k;
}

double KrmModel::predict(const PredictionInstance& inst) const {
  thread_local std::vector<double> k;
  state_into(inst, k);
  return course_bias(inst.target_course) + dot(k, required(inst.target_course));
}

void KrmModel::gradient(const PredictionInstance& inst, double residual, GradVec& out) const {
  require_priors(inst);
  const std::size_t d = static_cast<std::size_t>(config_.d);
  const std::size_t j = static_cast<std::size_t>(inst.target_course);
  const double pool = mean_pooling() ? 1.0 / static_cast<double>(inst.priors.size()) : 1.0;

  out.push_back({idx(off_cb_, j), residual});

  thread_local std::vector<double> k;
  state_into(inst, k);
  const std::span<const double> rj = required(inst.target_course);
  for (std::size_t a = 0; a < d; ++a) {
    out.push_back({idx(off_r_ + j * d, a), residual * k[a]});
  }
  for (const PriorCourse& p : inst.priors) {
    const double coeff = residual * pool * decay(p.term_offset, config_.lambda) * prior_grade(p);
    const std::size_t base = off_p_ + static_cast<std::size_t>(p.course) * d;
    for (std::size_t a = 0; a < d; ++a) {
      out.push_back({idx(base, a), coeff * rj[a]});
    }
  }
}

// --- NAK -------------------------------------------------------------------

NakModel::NakModel(const ModelConfig& config, int n_students, int n_courses, std::uint64_t seed)
    : GradeModel(config.kind, config, n_students, n_courses) {
  if (config.kind != ModelKind::nak_soft && config.kind != ModelKind::nak_sparse) {
    throw std::runtime_error("NakModel requires a nak kind");
  }
  if (config.d < 1) throw std::runtime_error("nak needs d >= 1");
  if (config.l < 1) throw std::runtime_error("nak needs l >= 1");
  if (config.kind == ModelKind::nak_sparse && !(config.gamma < 1.0)) {
    throw std::runtime_error("nak_sparse needs gamma < 1");
  }
  const std::size_t n = static_cast<std::size_t>(n_courses);
  const std::size_t d = static_cast<std::size_t>(config.d);
  const std::size_t l = static_cast<std::size_t>(config.l);
  off_cb_ = 0;
  off_p_ = n;
  off_r_ = off_p_ + n * d;
  off_w_ = off_r_ + n * d;
  off_b_ = off_w_ + l * d;
  off_h_ = off_b_ + l;
  theta_.assign(off_h_ + l, 0.0);

  Rng rng(seed);
  const double hw = 0.05 / std::sqrt(static_cast<double>(d));
  fill_uniform(std::span<double>(theta_).subspan(off_p_, n * d), rng, hw);
  fill_uniform(std::span<double>(theta_).subspan(off_r_, n * d), rng, hw);
  fill_uniform(std::span<double>(theta_).subspan(off_w_, l * d), rng, hw);
  fill_uniform(std::span<double>(theta_).subspan(off_h_, l), rng, hw);
}

std::span<const double> NakModel::provided(CourseId c) const {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<const double>(theta_).subspan(off_p_ + static_cast<std::size_t>(c) * d, d);
}
std::span<const double> NakModel::required(CourseId c) const {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<const double>(theta_).subspan(off_r_ + static_cast<std::size_t>(c) * d, d);
}
std::span<double> NakModel::provided(CourseId c) {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<double>(theta_).subspan(off_p_ + static_cast<std::size_t>(c) * d, d);
}
std::span<double> NakModel::required(CourseId c) {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<double>(theta_).subspan(off_r_ + static_cast<std::size_t>(c) * d, d);
}
std::span<const double> NakModel::attn_w_row(int row) const {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<const double>(theta_).subspan(off_w_ + static_cast<std::size_t>(row) * d, d);
}
std::span<double> NakModel::attn_w_row(int row) {
  const std::size_t d = static_cast<std::size_t>(config_.d);
  return std::span<double>(theta_).subspan(off_w_ + static_cast<std::size_t>(row) * d, d);
}
std::span<const double> NakModel::attn_b() const {
  return std::span<const double>(theta_).subspan(off_b_, static_cast<std::size_t>(config_.l));
}
std::span<double> NakModel::attn_b() {
  return std::span<double>(theta_).subspan(off_b_, static_cast<std::size_t>(config_.l));
}
std::span<const double> NakModel::attn_h() const {
  return std::span<const double>(theta_).subspan(off_h_, static_cast<std::size_t>(config_.l));
}
std::span<double> NakModel::attn_h() {
  return std::span<double>(theta_).subspan(off_h_, static_cast<std::size_t>(config_.l));
}

struct NakModel::Fwd {
  std::vector<double> q, t, e, logits, k;
  ProbVector attention;
};

NakModel::Fwd& NakModel::fwd_scratch() {
  thread_local Fwd fwd;
  return fwd;
}

// Full forward pass with caches: q_i = g p_i, t_i = q_i o r_j, e_i = W t_i + b,
// z_i = h . RELU(e_i), attention = activation(z), k = sum a_i q_i.
double NakModel::forward(const PredictionInstance& inst, Fwd& fwd) const {
  require_priors(inst);
  const std::size_t d = static_cast<std::size_t>(config_.d);
  const std::size_t l = static_cast<std::size_t>(config_.l);
  const std::size_t n_priors = inst.priors.size();
  const std::span<const double> rj = required(inst.target_course);
  const std::span<const double> h = attn_h();
  const std::span<const double> b = attn_b();

  fwd.q.resize(n_priors * d);
  fwd.t.resize(n_priors * d);
  fwd.e.resize(n_priors * l);
  fwd.logits.resize(n_priors);
  for (std::size_t i = 0; i < n_priors; ++i) {
    const PriorCourse& p = inst.priors[i];
    const double g = prior_grade(p);
    const std::span<const double> pi = provided(p.course);
    for (std::size_t jdx = 0; jdx < d; ++jdx) {
      fwd.q[i * d + jdx] = g * pi[jdx];
      fwd.t[i * d + jdx] = fwd.q[i * d + jdx] * rj[jdx];
    }
    double z = 0.0;
    for (std::size_t a = 0; a < l; ++a) {
      double ea = b[a];
      const double* wrow = theta_.data() + off_w_ + a * d;
      for (std::size_t jdx = 0; jdx < d; ++jdx) ea += wrow[jdx] * fwd.t[i * d + jdx];
      fwd.e[i * l + a] = ea;
      z += h[a] * (ea > 0.0 ? ea : 0.0);
    }
    fwd.logits[i] = z;
  }
  fwd.attention = attend(fwd.logits);

  fwd.k.assign(d, 0.0);
  for (std::size_t i = 0; i < n_priors; ++i) {
    const double a = fwd.attention.values[i];
    if (a == 0.0) continue;
    for (std::size_t jdx = 0; jdx < d; ++jdx) fwd.k[jdx] += a * fwd.q[i * d + jdx];
  }
  return course_bias(inst.target_course) + dot(fwd.k, rj);
}

std::vector<double> NakModel::attention_logits(const PredictionInstance& inst) const {
  Fwd& fwd = fwd_scratch();
  forward(inst, fwd);
  return fwd.logits;
}

ProbVector NakModel::attend(std::span<const double> logits) const {
  if (sparse_attention()) return sparsegen(logits, config_.gamma);
  return softmax(logits);
}

NakModel::KnowledgeState NakModel::knowledge_state(const PredictionInstance& inst) const {
  Fwd& fwd = fwd_scratch();
  forward(inst, fwd);
  return {fwd.k, fwd.attention};
}

double NakModel::predict(const PredictionInstance& inst) const {
  return forward(inst, fwd_scratch());
}

void NakModel::gradient(const PredictionInstance& inst, double residual, GradVec& out) const {
  Fwd& fwd = fwd_scratch();
  forward(inst, fwd);
  const std::size_t d = static_cast<std::size_t>(config_.d);
  const std::size_t l = static_cast<std::size_t>(config_.l);
  const std::size_t n_priors = inst.priors.size();
  const std::size_t j = static_cast<std::size_t>(inst.target_course);
  const std::span<const double> rj = required(inst.target_course);
  const std::span<const double> h = attn_h();

  // dL/dk and dL/da, then back through the activation.
  thread_local std::vector<double> dk, da, grad_rj, grad_w, grad_b, grad_h, delta, dt;
  dk.resize(d);
  for (std::size_t jdx = 0; jdx < d; ++jdx) dk[jdx] = residual * rj[jdx];
  da.resize(n_priors);
  for (std::size_t i = 0; i < n_priors; ++i) {
    double qr = 0.0;
    for (std::size_t jdx = 0; jdx < d; ++jdx) qr += fwd.q[i * d + jdx] * rj[jdx];
    da[i] = residual * qr;
  }
  const std::vector<double> dz = sparse_attention()
                                     ? sparsegen_backward(fwd.attention, da, config_.gamma)
                                     : softmax_backward(fwd.attention, da);

  out.push_back({idx(off_cb_, j), residual});

  grad_rj.resize(d);
  for (std::size_t jdx = 0; jdx < d; ++jdx) grad_rj[jdx] = residual * fwd.k[jdx];

  grad_w.assign(l * d, 0.0);
  grad_b.assign(l, 0.0);
  grad_h.assign(l, 0.0);
  delta.resize(l);
  dt.resize(d);
  for (std::size_t i = 0; i < n_priors; ++i) {
    const PriorCourse& p = inst.priors[i];
    const double g = prior_grade(p);
    for (std::size_t a = 0; a < l; ++a) {
      const double ea = fwd.e[i * l + a];
      const double relu = ea > 0.0 ? ea : 0.0;
      grad_h[a] += dz[i] * relu;
      delta[a] = (ea > 0.0) ? dz[i] * h[a] : 0.0;
      grad_b[a] += delta[a];
    }
    for (std::size_t jdx = 0; jdx < d; ++jdx) {
      double dtj = 0.0;
      for (std::size_t a = 0; a < l; ++a) {
        grad_w[a * d + jdx] += delta[a] * fwd.t[i * d + jdx];
        dtj += theta_[off_w_ + a * d + jdx] * delta[a];
      }
      dt[jdx] = dtj;
    }
    // q_i feeds both the attention input and the knowledge state.
    const std::size_t pbase = off_p_ + static_cast<std::size_t>(p.course) * d;
    for (std::size_t jdx = 0; jdx < d; ++jdx) {
      const double dq = dt[jdx] * rj[jdx] + fwd.attention.values[i] * dk[jdx];
      out.push_back({idx(pbase, jdx), g * dq});
      grad_rj[jdx] += dt[jdx] * fwd.q[i * d + jdx];
    }
  }

  for (std::size_t jdx = 0; jdx < d; ++jdx) {
    out.push_back({idx(off_r_ + j * d, jdx), grad_rj[jdx]});
  }
  for (std::size_t a = 0; a < l; ++a) {
    for (std::size_t jdx = 0; jdx < d; ++jdx) {
      out.push_back({idx(off_w_ + a * d, jdx), grad_w[a * d + jdx]});
    }
  }
  for (std::size_t a = 0; a < l; ++a) out.push_back({idx(off_b_, a), grad_b[a]});
  for (std::size_t a = 0; a < l; ++a) out.push_back({idx(off_h_, a), grad_h[a]});
}

// --- factory ---------------------------------------------------------------

std::unique_ptr<GradeModel> make_model(const ModelConfig& config, int n_students, int n_courses,
                                       std::uint64_t seed,
                                       const std::vector<PredictionInstance>* train_instances) {
  if (n_students < 1 || n_courses < 1) {
    throw std::runtime_error("model needs nonempty vocabularies");
  }
  switch (config.kind) {
    case ModelKind::mf:
      return std::make_unique<MfModel>(config, n_students, n_courses, seed);
    case ModelKind::csr:
      if (train_instances == nullptr) {
        throw std::runtime_error("csr needs the training instances to enumerate its weights");
      }
      return std::make_unique<CsrModel>(config, n_students, n_courses, *train_instances);
    case ModelKind::krm_sum:
    case ModelKind::krm_avg:
      return std::make_unique<KrmModel>(config, n_students, n_courses, seed);
    case ModelKind::nak_soft:
    case ModelKind::nak_sparse:
      return std::make_unique<NakModel>(config, n_students, n_courses, seed);
  }
  throw std::runtime_error("bad model kind");
}

}  // namespace gradepred
