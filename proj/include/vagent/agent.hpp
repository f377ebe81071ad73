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

#ifndef VAGENT_AGENT_HPP_
#define VAGENT_AGENT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vagent/action_space.hpp"
#include "vagent/memory.hpp"
#include "vagent/prompt.hpp"
#include "vagent/ui_model.hpp"
#include "vagent/verifier.hpp"

namespace vagent {

// The device the agent drives.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const UiState& state() const = 0;
  // Throws ExecutionError when the action cannot be applied.
  virtual void execute(const Action& action) = 0;
  virtual bool success() const = 0;
  // Ground-truth action for the current state when the environment knows it.
  virtual std::optional<Action> oracle_action() const { return std::nullopt; }
};

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  // Content for a TypeText/OpenApp/Answer action. Throws CompletionError.
  virtual std::string complete(const Action& action, const UiState& state, const WorkingMemory& memory,
                               std::string_view goal) = 0;
};

// Returns a copy with content filled for completion-requiring actions; other
// actions pass through without calling the provider.
Action complete_action(const Action& action, const UiState& state, const WorkingMemory& memory,
                       std::string_view goal, CompletionProvider& provider);

enum class Outcome { Success, Failure, BudgetExhausted };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> outcome_from_string(std::string_view name);

struct StepRecord {
  int step = 0;
  UiState state_before;
  UiState state_after;
  std::vector<std::string> memory_before;
  ActionSpace space;
  ScoreVector scores;
  int selected = 0;   // index into space of the executed action
  int proposed = 0;   // the verifier's own choice
  std::optional<int> oracle;  // ground-truth index when the environment provides one
  std::optional<std::string> completed_content;
  bool fallback = false;      // completion failed and the next-best action ran instead
  bool corrected = false;     // selected came from outside the verifier
  double entropy = 0.0;
  std::string summary;
  std::string error;          // execution failure, empty on success

  bool operator==(const StepRecord&) const = default;
};

struct TaskTrace {
  std::string task_id;
  std::string goal;
  nlohmann::json config = nlohmann::json::object();
  std::vector<StepRecord> records;
  Outcome outcome = Outcome::Failure;
  std::string cause;

  bool operator==(const TaskTrace&) const = default;
};

struct AgentConfig {
  int step_budget = 30;
  MemoryMode memory = MemoryMode::RuleBased;
  bool halt_on_success = true;
  bool grouped_scoring = true;  // score in cache-friendly batches
  PromptTemplate prompt = PromptTemplate::standard();
  StepSummarizer* summarizer = nullptr;

  nlohmann::json to_json() const;
};

// Everything the verifier produced for the current state, before execution.
struct StepProposal {
  std::vector<std::string> memory_before;
  ActionSpace space;
  std::vector<VerificationPrompt> prompts;
  ScoreVector scores;
  int selected = 0;
  std::optional<int> oracle;
  double entropy = 0.0;
};

// One episode, advanced a step at a time so that callers can inspect or
// override the verifier's choice before it executes.
class Agent {
 public:
  Agent(Environment& env, const ScorerBackend& backend, CompletionProvider& completion, AgentConfig config,
        std::string goal, std::string task_id = "");

  StepProposal propose() const;

  // Executes proposal.selected, or `override_index` when given. Content for
  // the executed action comes from `override_content` when given, else from
  // the completion provider. A completion failure on the verifier's own
  // choice falls back once to the next-best action.
  const StepRecord& commit(const StepProposal& proposal, std::optional<int> override_index = std::nullopt,
                           std::optional<std::string> override_content = std::nullopt);

  // propose + commit.
  const StepRecord& step();

  bool done() const;
  const WorkingMemory& memory() const { return memory_; }
  const std::vector<StepRecord>& records() const { return trace_.records; }
  const AgentConfig& config() const { return config_; }
  const std::string& goal() const { return trace_.goal; }

  // Snapshot with the outcome settled for the current position.
  TaskTrace trace() const;

 private:
  Environment* env_;
  const ScorerBackend* backend_;
  CompletionProvider* completion_;
  AgentConfig config_;
  WorkingMemory memory_;
  TaskTrace trace_;
  bool terminal_ = false;
  bool failed_ = false;
};

TaskTrace run_task(Environment& env, std::string_view goal, const ScorerBackend& backend,
                   CompletionProvider& completion, const AgentConfig& config = {},
                   std::string_view task_id = "");

// Trace files: a header line, one line per step, a footer line.
nlohmann::json step_to_json(const StepRecord& record);
StepRecord step_from_json(const nlohmann::json& j);
std::string trace_to_jsonl(const TaskTrace& trace);
TaskTrace trace_from_jsonl(std::string_view text);
void save_trace(const TaskTrace& trace, const std::string& path);
TaskTrace load_trace(const std::string& path);

// Fraction of executed steps whose action needed completion.
double completion_fraction(const std::vector<TaskTrace>& traces);

}  // namespace vagent

#endif  // VAGENT_AGENT_HPP_
