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

#ifndef VAGENT_SIM_EVALUATION_HPP_
#define VAGENT_SIM_EVALUATION_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "vagent/agent.hpp"
#include "vagent/sim/device.hpp"

namespace vagent::sim {

struct EvalConfig {
  int episodes = 200;           // counted episodes; tasks are cycled
  std::uint64_t env_seed = 1000;  // episode e resets with env_seed + e
  std::uint64_t seed = 0;       // injection sampler
  bool inject = false;          // execute a reversible wrong action at step 0
  AgentConfig agent;
};

struct EvalSummary {
  int episodes = 0;
  int successes = 0;
  int skipped = 0;            // no eligible wrong action to inject
  int on_path_steps = 0;      // verifier decisions taken on the oracle path
  int on_path_back = 0;       // ... that chose NavigateBack against the oracle
  double mean_steps = 0.0;

  double success_rate() const { return episodes ? static_cast<double>(successes) / episodes : 0.0; }
  double back_rate() const { return on_path_steps ? static_cast<double>(on_path_back) / on_path_steps : 0.0; }
  nlohmann::json to_json() const;
};

// Runs one episode. With `inject`, a uniformly chosen reversible off-path
// action from the initial state executes first as an override; returns false
// when there is none.
bool run_injected(SimDevice& device, const TaskSpec& task, std::uint64_t env_seed, std::uint64_t pick,
                  const ScorerBackend& backend, const AgentConfig& config, TaskTrace& out);

EvalSummary evaluate(SimDevice& device, std::span<const TaskSpec> tasks, const ScorerBackend& backend,
                     const EvalConfig& config, std::vector<TaskTrace>* traces = nullptr);

// On-path NavigateBack accounting over recorded traces; overridden steps are
// not verifier decisions and are skipped.
void count_on_path_back(const TaskTrace& trace, int& steps, int& back);

}  // namespace vagent::sim

#endif  // VAGENT_SIM_EVALUATION_HPP_
