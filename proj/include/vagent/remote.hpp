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

#ifndef VAGENT_REMOTE_HPP_
#define VAGENT_REMOTE_HPP_

#include <memory>
#include <string>

#include "vagent/agent.hpp"
#include "vagent/memory.hpp"
#include "vagent/scorer.hpp"

// Clients for model servers. Wire formats:
//   POST /score     {prompts:[text]}                          -> {scores:[float]}
//   POST /complete  {kind, goal, state_streamline, memory}    -> {content}
//   POST /summarize {goal, state_streamline, memory, action}  -> {summary}
namespace vagent {

struct RemoteConfig {
  std::string base_url;  // "http://host:port"
  double timeout_s = 30.0;
};

// Throws ScoringError on transport errors, non-200 replies and malformed
// bodies.
class HttpScorer final : public ScorerBackend {
 public:
  explicit HttpScorer(RemoteConfig config);
  std::vector<double> score_batch(std::span<const VerificationPrompt> prompts) const override;
  std::string descriptor() const override { return "http(" + config_.base_url + ")"; }

 private:
  RemoteConfig config_;
};

// Throws CompletionError.
class HttpCompletion final : public CompletionProvider {
 public:
  explicit HttpCompletion(RemoteConfig config);
  std::string complete(const Action& action, const UiState& state, const WorkingMemory& memory,
                       std::string_view goal) override;

 private:
  RemoteConfig config_;
};

// Throws Error on any failure; the agent then falls back to the rule-based
// summary.
class HttpSummarizer final : public StepSummarizer {
 public:
  explicit HttpSummarizer(RemoteConfig config);
  std::string summarize(std::string_view goal, std::string_view state_streamline, const WorkingMemory& memory,
                        std::string_view executed_action) override;

 private:
  RemoteConfig config_;
};

}  // namespace vagent

#endif  // VAGENT_REMOTE_HPP_
