// Copyright 2026 The vagent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VAGENT_MATH_HPP_
#define VAGENT_MATH_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace vagent {

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

// log(1 + exp(z)) without overflow for large |z|.
template <typename Scalar>
Scalar softplus(Scalar z) {
  if (z > Scalar(0)) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// Pairwise preference loss -log sigmoid(pos - neg) = softplus(-(pos - neg)).
template <typename Scalar>
Scalar p3_loss(Scalar pos_score, Scalar neg_score) {
  return softplus(neg_score - pos_score);
}

// d p3_loss / d (pos - neg) = -sigmoid(neg - pos).
template <typename Scalar>
Scalar p3_loss_margin_derivative(Scalar pos_score, Scalar neg_score) {
  return -sigmoid(neg_score - pos_score);
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(scores.size());
  if (scores.size() == 0) return out;
  const Scalar shift = scores.maxCoeff();
  out = (scores.array() - shift).exp().matrix();
  out /= out.sum();
  return out;
}

// Shannon entropy in nats of a probability vector; 0 log 0 is taken as 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& probs) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const Scalar p = probs(i);
    if (p > Scalar(0)) h -= p * std::log(p);
  }
  return std::max(h, Scalar(0));
}

// Lowest index of the maximum.
template <typename Derived>
Eigen::Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

// Lower median: element at position (n - 1) / 2 of the sorted values.
template <typename Scalar>
Scalar lower_median(std::vector<Scalar> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace vagent

#endif  // VAGENT_MATH_HPP_
