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
#include <vector>

namespace gradepred {

// Point on the probability simplex: values sum to 1, none negative.
// `support` lists the indices with a strictly positive value, ascending.
struct ProbVector {
  std::vector<double> values;
  std::vector<int> support;

  int size() const { return static_cast<int>(values.size()); }
  bool full_support() const { return support.size() == values.size(); }
};

// Standard softmax with max-subtraction for stability. Support is derived
// from the final values (extreme inputs can underflow a component to 0).
ProbVector softmax(std::span<const double> logits);

// Exact Euclidean projection onto the probability simplex via the sort-based
// algorithm: sort descending, find the largest k with 1 + k*z_(k) > cumsum_k,
// take tau = (cumsum_{k*} - 1) / k*, output max(z_i - tau, 0).
//
// Inputs are canonicalized by subtracting the maximum first, which makes the
// projection invariant to constant shifts whenever the shifted inputs are
// representable exactly.
ProbVector sparsemax(std::span<const double> logits);

// sparsemax(z / (1 - gamma)); gamma < 1. gamma = 0 reproduces sparsemax
// bit-for-bit; larger gamma sharpens the output (smaller support).
ProbVector sparsegen(std::span<const double> logits, double gamma);

// Jacobian-vector products of the forward transforms, evaluated at the
// forward output `p`. For sparsemax the Jacobian is the piecewise-linear
// projection derivative: within the support, upstream minus the support mean;
// zero outside.
std::vector<double> softmax_backward(const ProbVector& p, std::span<const double> upstream);
std::vector<double> sparsemax_backward(const ProbVector& p, std::span<const double> upstream);
std::vector<double> sparsegen_backward(const ProbVector& p, std::span<const double> upstream,
                                       double gamma);

}  // namespace gradepred
