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

#include "gradepred/activations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gradepred {

namespace {

void check_input(std::span<const double> logits) {
  if (logits.empty()) {
    throw std::runtime_error("activation input is empty");
  }
  for (double z : logits) {
    if (!std::isfinite(z)) {
      throw std::runtime_error("activation input is not finite");
    }
  }
}

void fill_support(ProbVector& p) {
  p.support.clear();
  for (int i = 0; i < p.size(); ++i) {
    if (p.values[static_cast<std::size_t>(i)] > 0.0) p.support.push_back(i);
  }
}

}  // namespace

ProbVector softmax(std::span<const double> logits) {
  check_input(logits);
  const double zmax = *std::max_element(logits.begin(), logits.end());
  ProbVector p;
  p.values.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p.values[i] = std::exp(logits[i] - zmax);
    sum += p.values[i];
  }
  for (double& v : p.values) v /= sum;
  fill_support(p);
  return p;
}

ProbVector sparsemax(std::span<const double> logits) {
  check_input(logits);
  const std::size_t n = logits.size();
  const double zmax = *std::max_element(logits.begin(), logits.end());

  std::vector<double> shifted(n);
  for (std::size_t i = 0; i < n; ++i) shifted[i] = logits[i] - zmax;

  std::vector<double> sorted = shifted;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());

  // Largest k with 1 + k * z_(k) > sum of the top k entries.
  double cumsum = 0.0;
  double cumsum_at_k = 0.0;
  std::size_t k_star = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    cumsum += sorted[k - 1];
    if (1.0 + static_cast<double>(k) * sorted[k - 1] > cumsum) {
      k_star = k;
      cumsum_at_k = cumsum;
    }
  }
  const double tau = (cumsum_at_k - 1.0) / static_cast<double>(k_star);

  ProbVector p;
  p.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.values[i] = std::max(shifted[i] - tau, 0.0);
  }
  fill_support(p);
  return p;
}

ProbVector sparsegen(std::span<const double> logits, double gamma) {
  if (!(gamma < 1.0)) {
    throw std::runtime_error("sparsegen gamma must be < 1");
  }
  check_input(logits);
  std::vector<double> scaled(logits.size());
  const double inv = 1.0 / (1.0 - gamma);
  for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] * inv;
  return sparsemax(scaled);
}

std::vector<double> softmax_backward(const ProbVector& p, std::span<const double> upstream) {
  if (upstream.size() != p.values.size()) {
    throw std::runtime_error("softmax_backward dimension mismatch");
  }
  double inner = 0.0;
  for (std::size_t i = 0; i < upstream.size(); ++i) inner += p.values[i] * upstream[i];
  std::vector<double> out(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    out[i] = p.values[i] * (upstream[i] - inner);
  }
  return out;
}

std::vector<double> sparsemax_backward(const ProbVector& p, std::span<const double> upstream) {
  if (upstream.size() != p.values.size()) {
    throw std::runtime_error("sparsemax_backward dimension mismatch");
  }
  std::vector<double> out(upstream.size(), 0.0);
  if (p.support.empty()) {
    throw std::runtime_error("sparsemax output has empty support");
  }
  double mean = 0.0;
  for (int i : p.support) mean += upstream[static_cast<std::size_t>(i)];
  mean /= static_cast<double>(p.support.size());
  for (int i : p.support) {
    out[static_cast<std::size_t>(i)] = upstream[static_cast<std::size_t>(i)] - mean;
  }
  return out;
}

std::vector<double> sparsegen_backward(const ProbVector& p, std::span<const double> upstream,
                                       double gamma) {
  if (!(gamma < 1.0)) {
    throw std::runtime_error("sparsegen gamma must be < 1");
  }
  std::vector<double> out = sparsemax_backward(p, upstream);
  const double inv = 1.0 / (1.0 - gamma);
  for (double& v : out) v *= inv;
  return out;
}

}  // namespace gradepred
