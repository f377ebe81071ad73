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

#ifndef VAGENT_TRAINING_HPP_
#define VAGENT_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vagent/agent.hpp"
#include "vagent/prompt.hpp"
#include "vagent/scorer.hpp"
#include "vagent/sim/device.hpp"

namespace vagent {

// ---------------------------------------------------------------- labels

// One step with its ground-truth action, ready for pair construction or
// ranking evaluation.
struct LabeledStep {
  std::shared_ptr<const PromptContext> context;
  ActionSpace space;
  int label = 0;
  std::string task_id;
  int step = 0;
};

enum class LabelSource {
  Oracle,    // the environment's ground truth recorded on each step
  Executed,  // whatever ran, e.g. after human review
};

// Steps without a label under `source` are skipped.
std::vector<LabeledStep> labeled_steps(const TaskTrace& trace, LabelSource source = LabelSource::Oracle);

// "notes.create#3" -> "notes"
std::string app_of_task(const std::string& task_id);

// ---------------------------------------------------------------- pairs

enum class PairKind { Process, SelfCorrect };

std::string_view to_string(PairKind kind);
std::optional<PairKind> pair_kind_from_string(std::string_view name);

// Both prompts share `context`; only the candidate action differs.
struct PreferencePair {
  std::shared_ptr<const PromptContext> context;
  Action pos;
  Action neg;
  PairKind kind = PairKind::Process;
  std::string task_id;
  int step = 0;
};

// Positive against every other action of the step: |space| - 1 pairs.
// Throws DataError when the label lies outside the space.
std::vector<PreferencePair> build_process_pairs(const LabeledStep& step);
std::vector<PreferencePair> build_process_pairs(std::span<const LabeledStep> steps);

// Reverse map: Click/LongPress -> NavigateBack, OpenApp -> NavigateHome,
// Scroll(d) -> Scroll(opposite d) on the same target, TypeText -> ClearText on
// the same target. Other types have no reverse.
std::optional<Action> reverse_action(const Action& executed);
// Index of the reverse of `executed` inside the space of the state it led to.
std::optional<int> find_reverse(const Action& executed, const ActionSpace& space);

// Self-correct pairs making up `fraction` of the combined set:
// round(f * P / (1 - f)).
std::size_t self_correct_target(std::size_t process_pairs, double fraction);

// Content used when a sampled wrong action needs completion.
std::optional<std::string> branch_content(const Action& action, const sim::SimDevice& device,
                                          std::uint64_t salt);

// Indices of actions from the device's current state that are not the
// oracle's choice, are reversible as executed, and leave the oracle path.
std::vector<int> wrong_branches(const sim::SimDevice& device, const ActionSpace& space);

struct SelfCorrectConfig {
  std::size_t target = 0;      // exact number of pairs to emit when enough branches exist
  std::uint64_t seed = 0;      // branch sampler
  std::uint64_t env_seed = 0;  // device reset seed, as used for the process traces
  AgentConfig agent;           // memory mode and prompt template of the contexts
  int max_attempts = 20000;
};

// Samples (on-path state, wrong action) branches uniformly over on-path states
// and then over that state's wrong actions. Each branch contributes the
// reverse action as positive against every other action of the erroneous
// state; the final branch is truncated so the total equals `target`.
std::vector<PreferencePair> build_self_correct_pairs(sim::SimDevice& device, std::span<const sim::TaskSpec> tasks,
                                                     const SelfCorrectConfig& config);

// Pair file: context lines followed by the pairs that reference them.
std::string pairs_to_jsonl(std::span<const PreferencePair> pairs);
std::vector<PreferencePair> pairs_from_jsonl(std::string_view text);
void save_pairs(std::span<const PreferencePair> pairs, const std::string& path);
std::vector<PreferencePair> load_pairs(const std::string& path);

// Throws DataError if any pair comes from a held-out app.
void check_no_held_out(std::span<const PreferencePair> pairs, const sim::World& world);

// ---------------------------------------------------------------- corpus

// Teacher-forced traces: the oracle backend drives each task, so every step is
// labeled and on-path.
std::vector<TaskTrace> oracle_traces(sim::SimDevice& device, std::span<const sim::TaskSpec> tasks,
                                     std::uint64_t env_seed, const AgentConfig& config = {});

struct TaskSplit {
  std::vector<sim::TaskSpec> train;
  std::vector<sim::TaskSpec> eval;  // unseen instances of training apps
  std::vector<sim::TaskSpec> ood;   // held-out apps

  nlohmann::json manifest() const;
};

// Held-out apps go to `ood`; the rest is split per instance by a seeded hash.
TaskSplit split_tasks(std::span<const sim::TaskSpec> tasks, double eval_fraction, std::uint64_t seed);

// ---------------------------------------------------------------- loss

// Adds weight * dL/dθ for one pair to `grad` and returns the pair's loss.
double loss_grad(const FeatureScorer& scorer, const SparseFeatures& pos, const SparseFeatures& neg, Gradient& grad,
                 double weight = 1.0);
double loss_grad(const FeatureScorer& scorer, const PreferencePair& pair, Gradient& grad, double weight = 1.0);
double pair_loss(const FeatureScorer& scorer, const PreferencePair& pair);

// Top-1 ranking accuracy of the labeled action. Ties at the maximum earn
// fractional credit 1/k when the label is among the k tied actions.
double ranking_accuracy(const ScorerBackend& backend, std::span<const LabeledStep> steps);

// Mean of 1/|A(t)|: the accuracy of a uniformly random ranking.
double chance_accuracy(std::span<const LabeledStep> steps);

// ---------------------------------------------------------------- training

struct TrainerConfig {
  double peak_lr = 0.1;
  int warmup_steps = 10;
  double floor_lr = 1e-3;
  int epochs = 20;
  int batch_size = 32;
  double self_correct_fraction = 0.025;
  std::uint64_t seed = 0;
  HeadType head = HeadType::Linear;
  int hidden = 32;

  // Throws ValidationError.
  void validate() const;
  // Linear warm-up to peak, then cosine decay to the floor at total_steps.
  double lr_at(int step, int total_steps) const;
  nlohmann::json to_json() const;
  static TrainerConfig from_json(const nlohmann::json& j);
};

struct EpochReport {
  int epoch = 0;
  double loss = 0.0;          // mean pair loss after the epoch
  double heldout_top1 = 0.0;  // NaN when no held-out steps are given
  double gap = 0.0;           // mean pos - neg score over training pairs
  double lr = 0.0;            // learning rate of the epoch's last batch
};

struct TrainingReport {
  std::vector<EpochReport> epochs;
  double initial_loss = 0.0;
  double final_gap = 0.0;
  std::size_t pairs = 0;
  std::size_t self_correct_pairs = 0;
  std::size_t heldout_steps = 0;

  nlohmann::json to_json() const;
};

// Mini-batch gradient descent on the mean pair loss. Deterministic given the
// config seed. Throws TrainingError on a non-finite loss or parameter.
TrainingReport train(FeatureScorer& scorer, std::span<const PreferencePair> pairs,
                     std::span<const LabeledStep> heldout, const TrainerConfig& config,
                     const std::function<void(const EpochReport&)>& on_epoch = {});

}  // namespace vagent

#endif  // VAGENT_TRAINING_HPP_
