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

#ifndef VAGENT_SIM_ENVIRONMENT_HPP_
#define VAGENT_SIM_ENVIRONMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "vagent/agent.hpp"
#include "vagent/scorer.hpp"
#include "vagent/sim/device.hpp"

namespace vagent::sim {

// Adapts a SimDevice to the agent's Environment interface.
class DeviceEnvironment final : public Environment {
 public:
  explicit DeviceEnvironment(SimDevice& device) : device_(&device) {}

  const UiState& state() const override { return device_->state(); }
  void execute(const Action& action) override { device_->execute(action); }
  bool success() const override { return device_->success(); }
  // nullopt when the device has left the oracle path.
  std::optional<Action> oracle_action() const override;

  SimDevice& device() { return *device_; }

 private:
  SimDevice* device_;
};

// Content from the task's oracle: the app to open, the on-path text for a
// field, or the answer once it is on screen.
class OracleCompletion final : public CompletionProvider {
 public:
  explicit OracleCompletion(const SimDevice& device) : device_(&device) {}
  std::string complete(const Action& action, const UiState& state, const WorkingMemory& memory,
                       std::string_view goal) override;

 private:
  const SimDevice* device_;
};

// Scores kOracleMargin for the device's current oracle action and 0 for
// everything else; all zeros off the oracle path. The margin makes the
// normalized distribution effectively one-hot, so on-path entropy is ~0 and
// off-path entropy is ln N.
inline constexpr double kOracleMargin = 40.0;

class OracleScorer final : public ScorerBackend {
 public:
  explicit OracleScorer(const SimDevice& device) : device_(&device) {}
  std::vector<double> score_batch(std::span<const VerificationPrompt> prompts) const override;
  std::string descriptor() const override { return "sim-oracle"; }

 private:
  const SimDevice* device_;
};

// Resets the device to `task` and runs one episode with oracle completion.
TaskTrace run_episode(SimDevice& device, const TaskSpec& task, std::uint64_t seed, const ScorerBackend& backend,
                      const AgentConfig& config = {});

}  // namespace vagent::sim

#endif  // VAGENT_SIM_ENVIRONMENT_HPP_
