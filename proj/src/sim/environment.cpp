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

#include "vagent/sim/environment.hpp"

#include "vagent/error.hpp"

namespace vagent::sim {

std::optional<Action> DeviceEnvironment::oracle_action() const {
  if (!device_->on_path()) return std::nullopt;
  return device_->oracle_action();
}

std::string OracleCompletion::complete(const Action& action, const UiState&, const WorkingMemory&,
                                       std::string_view) {
  return device_->complete(action);
}

std::vector<double> OracleScorer::score_batch(std::span<const VerificationPrompt> prompts) const {
  std::vector<double> out(prompts.size(), 0.0);
  if (!device_->on_path()) return out;
  const Action oracle = device_->oracle_action();
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    out[i] = prompts[i].action.same_choice(oracle) ? kOracleMargin : 0.0;
  }
  return out;
}

TaskTrace run_episode(SimDevice& device, const TaskSpec& task, std::uint64_t seed, const ScorerBackend& backend,
                      const AgentConfig& config) {
  device.reset(task, seed);
  DeviceEnvironment env(device);
  OracleCompletion completion(device);
  return run_task(env, task.goal, backend, completion, config, task.id);
}

}  // namespace vagent::sim
