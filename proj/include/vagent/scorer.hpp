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

#ifndef VAGENT_SCORER_HPP_
#define VAGENT_SCORER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "vagent/features.hpp"
#include "vagent/heads.hpp"
#include "vagent/prompt.hpp"

namespace vagent {

// Anything that maps verification prompts to real scores, one per prompt.
// score_batch may be called concurrently; implementations keep it read-only.
class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;
  virtual std::vector<double> score_batch(std::span<const VerificationPrompt> prompts) const = 0;
  virtual std::string descriptor() const = 0;
};

enum class HeadType { Linear, Mlp };

std::string head_name(HeadType h);
// Throws DataError.
HeadType head_from_name(const std::string& s);

struct FeatureScorerConfig {
  FeaturizerConfig features;
  HeadType head = HeadType::Linear;
  int hidden = 32;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
};

using Gradient = HeadGradient<double>;

// Hashed-feature surrogate verifier. The featurizer is fixed; only the head is
// trained.
class FeatureScorer final : public ScorerBackend {
 public:
  explicit FeatureScorer(FeatureScorerConfig config = {});

  // Linear head with weights drawn uniformly from [-scale, scale]; used as an
  // untrained-but-not-constant baseline.
  static FeatureScorer randomized(std::uint64_t seed, double scale = 1.0,
                                  FeatureScorerConfig config = {});

  std::vector<double> score_batch(std::span<const VerificationPrompt> prompts) const override;
  std::string descriptor() const override;

  const FeatureScorerConfig& config() const { return config_; }
  const Featurizer& featurizer() const { return featurizer_; }
  HeadType head_type() const { return config_.head; }

  double score(const SparseFeatures& x) const;
  void accumulate(const SparseFeatures& x, double coef, Gradient& grad) const;
  void apply(const Gradient& grad, double step);
  double& param(const ParamRef& p);
  bool all_finite() const;

  LinearHead<double>* linear() { return std::get_if<LinearHead<double>>(&head_); }
  MlpHead<double>* mlp() { return std::get_if<MlpHead<double>>(&head_); }
  const LinearHead<double>* linear() const { return std::get_if<LinearHead<double>>(&head_); }
  const MlpHead<double>* mlp() const { return std::get_if<MlpHead<double>>(&head_); }

  nlohmann::json to_json() const;
  static FeatureScorer from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static FeatureScorer load(const std::string& path);

 private:
  FeatureScorerConfig config_;
  Featurizer featurizer_;
  std::variant<LinearHead<double>, MlpHead<double>> head_;
};

// Scores produced by a callback over one prompt; the oracle and test doubles
// are built on this.
class FunctionScorer final : public ScorerBackend {
 public:
  using Fn = std::function<double(const VerificationPrompt&)>;
  FunctionScorer(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  std::vector<double> score_batch(std::span<const VerificationPrompt> prompts) const override {
    std::vector<double> out;
    out.reserve(prompts.size());
    for (const auto& p : prompts) out.push_back(fn_(p));
    return out;
  }
  std::string descriptor() const override { return name_; }

 private:
  std::string name_;
  Fn fn_;
};

// Wraps another backend and, on selected steps, replaces its scores with
// Gaussian noise (deterministic in seed, step and prompt index).
class NoisyScorer final : public ScorerBackend {
 public:
  NoisyScorer(const ScorerBackend& inner, std::uint64_t seed, double noise_sd,
              std::function<bool(int step)> noisy_step)
      : inner_(inner), seed_(seed), noise_sd_(noise_sd), noisy_step_(std::move(noisy_step)) {}

  std::vector<double> score_batch(std::span<const VerificationPrompt> prompts) const override;
  std::string descriptor() const override { return "noisy(" + inner_.descriptor() + ")"; }

 private:
  const ScorerBackend& inner_;
  std::uint64_t seed_;
  double noise_sd_;
  std::function<bool(int)> noisy_step_;
};

}  // namespace vagent

#endif  // VAGENT_SCORER_HPP_
