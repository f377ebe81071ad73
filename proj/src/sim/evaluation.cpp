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

#include "vagent/sim/evaluation.hpp"

#include <random>

#include "vagent/error.hpp"
#include "vagent/sim/environment.hpp"
#include "vagent/training.hpp"

namespace vagent::sim {

nlohmann::json EvalSummary::to_json() const {
  return {{"episodes", episodes},
          {"successes", successes},
          {"success_rate", success_rate()},
          {"skipped", skipped},
          {"on_path_steps", on_path_steps},
          {"on_path_back", on_path_back},
          {"back_rate", back_rate()},
          {"mean_steps", mean_steps}};
}

bool run_injected(SimDevice& device, const TaskSpec& task, std::uint64_t env_seed, std::uint64_t pick,
                  const ScorerBackend& backend, const AgentConfig& config, TaskTrace& out) {
  device.reset(task, env_seed);
  DeviceEnvironment env(device);
  OracleCompletion completion(device);
  Agent agent(env, backend, completion, config, task.goal, task.id);
  const StepProposal first = agent.propose();
  const auto wrong = wrong_branches(device, first.space);
  if (wrong.empty()) return false;
  const int w = wrong[pick % wrong.size()];
  const Action& a = first.space.actions[static_cast<std::size_t>(w)];
  std::optional<std::string> content;
  if (requires_completion(a.type)) content = branch_content(a, device, static_cast<std::uint64_t>(w));
  agent.commit(first, w, content);
  while (!agent.done()) agent.step();
  out = agent.trace();
  return true;
}

void count_on_path_back(const TaskTrace& trace, int& steps, int& back) {
  for (const auto& r : trace.records) {
    if (r.corrected || !r.oracle) continue;
    ++steps;
    const auto chosen = r.space.actions[static_cast<std::size_t>(r.proposed)].type;
    const auto wanted = r.space.actions[static_cast<std::size_t>(*r.oracle)].type;
    if (chosen == ActionType::NavigateBack && wanted != ActionType::NavigateBack) ++back;
  }
}

EvalSummary evaluate(SimDevice& device, std::span<const TaskSpec> tasks, const ScorerBackend& backend,
                     const EvalConfig& config, std::vector<TaskTrace>* traces) {
  if (tasks.empty()) throw ValidationError("evaluation needs at least one task");
  if (config.episodes < 1) throw ValidationError("evaluation needs at least one episode");
  EvalSummary s;
  std::mt19937_64 rng(config.seed);
  double steps = 0.0;
  // Skipped injections do not count towards the episode total.
  for (int e = 0; s.episodes < config.episodes && e < 4 * config.episodes; ++e) {
    const auto& task = tasks[static_cast<std::size_t>(e) % tasks.size()];
    const std::uint64_t env_seed = config.env_seed + static_cast<std::uint64_t>(e);
    TaskTrace trace;
    if (config.inject) {
      if (!run_injected(device, task, env_seed, rng(), backend, config.agent, trace)) {
        ++s.skipped;
        continue;
      }
    } else {
      trace = run_episode(device, task, env_seed, backend, config.agent);
    }
    ++s.episodes;
    if (trace.outcome == Outcome::Success) ++s.successes;
    steps += static_cast<double>(trace.records.size());
    count_on_path_back(trace, s.on_path_steps, s.on_path_back);
    if (traces != nullptr) traces->push_back(std::move(trace));
  }
  s.mean_steps = s.episodes ? steps / s.episodes : 0.0;
  return s;
}

}  // namespace vagent::sim
