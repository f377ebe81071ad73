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

#ifndef VAGENT_HEADS_HPP_
#define VAGENT_HEADS_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace vagent {

// Gradient of a head's score (or loss) restricted to the parameters a batch
// touched. Input-weight columns are keyed by feature index; a linear head uses
// one-element columns.
template <typename Scalar>
struct HeadGradient {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::map<Eigen::Index, Vector> columns;
  Vector hidden_bias;
  Vector output_weights;
  Scalar output_bias = Scalar(0);

  void add_column(Eigen::Index j, const Vector& v) {
    auto [it, inserted] = columns.try_emplace(j, v);
    if (!inserted) it->second += v;
  }
};

enum class ParamKind { InputWeight, HiddenBias, OutputWeight, OutputBias };

struct ParamRef {
  ParamKind kind = ParamKind::OutputBias;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
};

template <typename Scalar>
Scalar gradient_at(const HeadGradient<Scalar>& g, const ParamRef& p) {
  switch (p.kind) {
    case ParamKind::InputWeight: {
      const auto it = g.columns.find(p.col);
      return it == g.columns.end() ? Scalar(0) : it->second(p.row);
    }
    case ParamKind::HiddenBias: return g.hidden_bias.size() ? g.hidden_bias(p.row) : Scalar(0);
    case ParamKind::OutputWeight:
      return g.output_weights.size() ? g.output_weights(p.row) : Scalar(0);
    case ParamKind::OutputBias: return g.output_bias;
  }
  return Scalar(0);
}

template <typename Scalar>
class LinearHead {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Gradient = HeadGradient<Scalar>;

  explicit LinearHead(Eigen::Index dim = 0) : weights_(Vector::Zero(dim)) {}

  Eigen::Index input_dim() const { return weights_.size(); }
  const Vector& weights() const { return weights_; }
  Vector& weights() { return weights_; }
  Scalar bias() const { return bias_; }
  Scalar& bias() { return bias_; }

  Scalar score(const Eigen::SparseVector<double>& x) const {
    Scalar s = bias_;
    for (typename Eigen::SparseVector<double>::InnerIterator it(x); it; ++it) {
      s += weights_(it.index()) * Scalar(it.value());
    }
    return s;
  }

  // grad += coef * d score / d params
  void accumulate(const Eigen::SparseVector<double>& x, Scalar coef, Gradient& grad) const {
    for (typename Eigen::SparseVector<double>::InnerIterator it(x); it; ++it) {
      grad.add_column(it.index(), Vector::Constant(1, coef * Scalar(it.value())));
    }
    grad.output_bias += coef;
  }

  void apply(const Gradient& grad, Scalar step) {
    for (const auto& [j, g] : grad.columns) weights_(j) -= step * g(0);
    bias_ -= step * grad.output_bias;
  }

  Scalar& param(const ParamRef& p) {
    return p.kind == ParamKind::InputWeight ? weights_(p.col) : bias_;
  }

  bool all_finite() const { return weights_.allFinite() && std::isfinite(bias_); }

 private:
  Vector weights_;
  Scalar bias_ = Scalar(0);
};

// One hidden tanh layer: score = w2 . tanh(W1 x + b1) + b2.
template <typename Scalar>
class MlpHead {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Gradient = HeadGradient<Scalar>;

  MlpHead() = default;
  MlpHead(Eigen::Index dim, Eigen::Index hidden, std::uint64_t seed, Scalar init_scale = Scalar(0.1))
      : seed_(seed), init_scale_(init_scale) {
    input_ = initial_input_weights(dim, hidden, seed, init_scale);
    hidden_bias_ = Vector::Zero(hidden);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    output_weights_.resize(hidden);
    for (Eigen::Index k = 0; k < hidden; ++k) output_weights_(k) = uniform(rng, init_scale);
  }

  // Deterministic initial W1 for (dim, hidden, seed); serialisation stores
  // only columns that moved away from it.
  static Matrix initial_input_weights(Eigen::Index dim, Eigen::Index hidden, std::uint64_t seed,
                                      Scalar scale) {
    Matrix w(hidden, dim);
    std::mt19937_64 rng(seed);
    for (Eigen::Index j = 0; j < dim; ++j) {
      for (Eigen::Index k = 0; k < hidden; ++k) w(k, j) = uniform(rng, scale);
    }
    return w;
  }

  Eigen::Index input_dim() const { return input_.cols(); }
  Eigen::Index hidden_dim() const { return input_.rows(); }
  std::uint64_t seed() const { return seed_; }
  Scalar init_scale() const { return init_scale_; }
  const std::set<Eigen::Index>& touched_columns() const { return touched_; }

  const Matrix& input_weights() const { return input_; }
  Matrix& input_weights() { return input_; }
  const Vector& hidden_bias() const { return hidden_bias_; }
  Vector& hidden_bias() { return hidden_bias_; }
  const Vector& output_weights() const { return output_weights_; }
  Vector& output_weights() { return output_weights_; }
  Scalar output_bias() const { return output_bias_; }
  Scalar& output_bias() { return output_bias_; }
  void mark_touched(Eigen::Index j) { touched_.insert(j); }

  Vector hidden(const Eigen::SparseVector<double>& x) const {
    Vector pre = hidden_bias_;
    for (typename Eigen::SparseVector<double>::InnerIterator it(x); it; ++it) {
      pre.noalias() += Scalar(it.value()) * input_.col(it.index());
    }
    return pre.array().tanh().matrix();
  }

  Scalar score(const Eigen::SparseVector<double>& x) const {
    return output_weights_.dot(hidden(x)) + output_bias_;
  }

  void accumulate(const Eigen::SparseVector<double>& x, Scalar coef, Gradient& grad) const {
    const Vector h = hidden(x);
    const Vector delta =
        (coef * output_weights_.array() * (Scalar(1) - h.array().square())).matrix();
    for (typename Eigen::SparseVector<double>::InnerIterator it(x); it; ++it) {
      grad.add_column(it.index(), delta * Scalar(it.value()));
    }
    if (grad.hidden_bias.size() == 0) grad.hidden_bias = Vector::Zero(hidden_dim());
    if (grad.output_weights.size() == 0) grad.output_weights = Vector::Zero(hidden_dim());
    grad.hidden_bias += delta;
    grad.output_weights += coef * h;
    grad.output_bias += coef;
  }

  void apply(const Gradient& grad, Scalar step) {
    for (const auto& [j, g] : grad.columns) {
      input_.col(j) -= step * g;
      touched_.insert(j);
    }
    if (grad.hidden_bias.size()) hidden_bias_ -= step * grad.hidden_bias;
    if (grad.output_weights.size()) output_weights_ -= step * grad.output_weights;
    output_bias_ -= step * grad.output_bias;
  }

  Scalar& param(const ParamRef& p) {
    switch (p.kind) {
      case ParamKind::InputWeight: return input_(p.row, p.col);
      case ParamKind::HiddenBias: return hidden_bias_(p.row);
      case ParamKind::OutputWeight: return output_weights_(p.row);
      case ParamKind::OutputBias: break;
    }
    return output_bias_;
  }

  bool all_finite() const {
    return input_.allFinite() && hidden_bias_.allFinite() && output_weights_.allFinite() &&
           std::isfinite(output_bias_);
  }

 private:
  static Scalar uniform(std::mt19937_64& rng, Scalar scale) {
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return Scalar((2.0 * u - 1.0)) * scale;
  }

  std::uint64_t seed_ = 0;
  Scalar init_scale_ = Scalar(0.1);
  Matrix input_;
  Vector hidden_bias_;
  Vector output_weights_;
  Scalar output_bias_ = Scalar(0);
  std::set<Eigen::Index> touched_;
};

}  // namespace vagent

#endif  // VAGENT_HEADS_HPP_
