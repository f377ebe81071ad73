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

#ifndef VAGENT_FEATURES_HPP_
#define VAGENT_FEATURES_HPP_

#include <cstdint>
#include <string_view>

#include <Eigen/SparseCore>

#include "vagent/action_space.hpp"
#include "vagent/prompt.hpp"

namespace vagent {

using SparseFeatures = Eigen::SparseVector<double>;

// 64-bit FNV-1a; stable across processes and platforms.
std::uint64_t stable_hash(std::string_view text, std::uint64_t seed = 0);

struct FeaturizerConfig {
  int dim = 1 << 16;
  int min_ngram = 3;
  int max_ngram = 5;
  int memory_tail = 1;
  // L2 norm of every feature vector. Sized so that the default learning rate
  // moves scores by O(1) per epoch.
  double norm = 16.0;
};

// Signed feature hashing of a candidate in its step context: character
// n-grams of the action descriptor, plus conjunctions of descriptor words
// with goal words, the screen, and the memory tail, plus goal-entity match
// indicators. The result is scaled to L2 norm config.norm.
class Featurizer {
 public:
  explicit Featurizer(FeaturizerConfig config = {}) : config_(config) {}

  const FeaturizerConfig& config() const { return config_; }

  SparseFeatures operator()(const PromptContext& ctx, const Action& action) const;
  SparseFeatures operator()(const VerificationPrompt& prompt) const {
    return (*this)(*prompt.context, prompt.action);
  }

 private:
  FeaturizerConfig config_;
};

}  // namespace vagent

#endif  // VAGENT_FEATURES_HPP_
