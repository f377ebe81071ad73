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

#ifndef VAGENT_VERIFIER_HPP_
#define VAGENT_VERIFIER_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vagent/action_space.hpp"
#include "vagent/prompt.hpp"
#include "vagent/scorer.hpp"

namespace vagent {

struct ScoreVector {
  std::vector<double> scores;      // raw, as returned by the backend
  std::vector<double> normalized;  // softmax(scores)
  std::string backend;

  bool operator==(const ScoreVector&) const = default;
};

// Throws ScoringError when the backend throws or returns the wrong number of
// scores, ValidationError on a non-finite score.
ScoreVector score_actions(const ScorerBackend& backend, std::span<const VerificationPrompt> prompts);

// Entropy in nats of the normalized scores. Throws ValidationError when empty.
double score_entropy(const ScoreVector& scores);

// Argmax; ties go to the lowest index.
int select(const ScoreVector& scores);

struct ScheduleGroup {
  ActionType type;
  std::vector<int> prompts;
};

struct BatchSchedule {
  int warmup = 0;
  std::vector<ScheduleGroup> groups;

  std::vector<int> order() const;
};

BatchSchedule schedule(std::span<const VerificationPrompt> prompts, const ActionSpace& space);

// Prompts in index order with no grouping; the baseline for cost comparison.
BatchSchedule sequential_schedule(std::size_t n);

inline constexpr double kDefaultPrefillRate = 450.0;

struct CostReport {
  std::int64_t total_tokens = 0;
  std::int64_t cached_tokens = 0;
  std::int64_t fresh_tokens = 0;
  double est_latency_s = 0.0;
};

// Token-level prefix cache: each prompt pays for the tokens past its longest
// common prefix with any prompt processed before it.
CostReport simulate_cost(const BatchSchedule& schedule, std::span<const VerificationPrompt> prompts,
                         double prefill_rate = kDefaultPrefillRate);

// No caching at all: every prompt pays in full.
CostReport uncached_cost(std::span<const VerificationPrompt> prompts,
                         double prefill_rate = kDefaultPrefillRate);

// Scores prompts batch by batch in schedule order (warm-up alone, then one
// call per group) and reassembles the result in prompt order.
ScoreVector score_scheduled(const ScorerBackend& backend, std::span<const VerificationPrompt> prompts,
                            const BatchSchedule& schedule);

// A list screen whose action space has exactly `actions` entries: one click
// per row plus the defaults. Used to probe the cost model at a given width.
// Throws ValidationError when `actions` is below the number of defaults.
UiState wide_screen(int actions);

}  // namespace vagent

#endif  // VAGENT_VERIFIER_HPP_
