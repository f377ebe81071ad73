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

#ifndef VAGENT_ANNOTATION_HPP_
#define VAGENT_ANNOTATION_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vagent/agent.hpp"
#include "vagent/scorer.hpp"
#include "vagent/sim/device.hpp"
#include "vagent/sim/environment.hpp"
#include "vagent/training.hpp"

namespace vagent {

// ---------------------------------------------------------------- triage

struct EntropyReport {
  int step = 0;
  double entropy = 0.0;
  bool flagged = false;
  double threshold = 0.0;
};

// Lower median of the entropies. Throws ValidationError when empty.
double compute_threshold(std::span<const double> entropies);

// One report per step; flagged when entropy > threshold.
std::vector<EntropyReport> triage(const TaskTrace& trace, double threshold);

// Ground truth for one recorded step: the verifier's own choice equals the
// oracle action. Off-path steps (no oracle) count as wrong.
bool step_correct(const StepRecord& record);

struct TruthTable {
  double tp = 0.0;  // flagged and wrong
  double tn = 0.0;  // unflagged and correct
  double fp = 0.0;  // flagged and correct
  double fn = 0.0;  // unflagged and wrong
  std::size_t steps = 0;

  double accuracy() const { return tp + tn; }
  nlohmann::json to_json() const;
};

// Throws ValidationError on a length mismatch or empty input.
TruthTable truth_table(std::span<const bool> flags, std::span<const bool> correct);

// Area under the ROC curve of `score` as a predictor of `positive`
// (Mann-Whitney, ties counted half). NaN when either class is empty.
double roc_auc(std::span<const double> score, std::span<const bool> positive);

// Teacher-forced triage inputs: each labeled step is scored in its recorded
// state, so errors do not compound along a trace.
struct StepVerdict {
  double entropy = 0.0;
  bool correct = false;  // the backend's pick is the labeled action
};

std::vector<StepVerdict> score_steps(const ScorerBackend& backend, std::span<const LabeledStep> steps,
                                     const PromptTemplate& tmpl = PromptTemplate::standard());

// ---------------------------------------------------------------- sessions

enum class SessionStatus { Running, AwaitingHuman, Finished, Aborted };
enum class ThresholdMode { Fixed, Rolling };

std::string_view to_string(SessionStatus status);
std::string_view to_string(ThresholdMode mode);
std::optional<ThresholdMode> threshold_mode_from_string(std::string_view name);

struct SessionConfig {
  AgentConfig agent;
  ThresholdMode mode = ThresholdMode::Fixed;
  double threshold = 1.0;  // fixed mode; nats
  int window = 2;          // steps before the pending one open to correction
  std::uint64_t env_seed = 0;
};

struct Correction {
  int step = 0;
  int action_index = 0;
  std::optional<std::string> content;
  bool approved = false;  // confirmed the verifier's choice unchanged
};

// Builds the session's scorer against its device; called again whenever the
// episode is replayed. An empty factory scores with the task oracle.
using BackendFactory = std::function<std::shared_ptr<const ScorerBackend>(const sim::SimDevice&)>;

// Wraps a device-independent backend.
BackendFactory shared_backend(std::shared_ptr<const ScorerBackend> backend);

// The task oracle with Gaussian noise (sd `noise_sd`) replacing its scores on
// the listed steps; an empty list means every step.
BackendFactory noisy_oracle_backend(std::uint64_t seed, double noise_sd, std::vector<int> steps);

// One task under human-agent joint annotation. The agent runs until a step's
// entropy crosses the threshold, then waits for approve() or correct().
// Corrections may rewind up to `window` steps; the episode is replayed from
// the reset with every earlier decision reapplied. Not thread-safe.
class AnnotationSession {
 public:
  AnnotationSession(std::string id, const sim::World& world, sim::TaskSpec task, BackendFactory backend,
                    SessionConfig config);

  const std::string& id() const { return id_; }
  const sim::TaskSpec& task() const { return task_; }
  const SessionConfig& config() const { return config_; }
  const sim::World& world() const { return *world_; }
  SessionStatus status() const { return status_; }
  // Step waiting for a human, if any.
  std::optional<int> pending() const;
  const std::vector<Correction>& corrections() const { return corrections_; }
  const std::vector<EntropyReport>& reports() const { return reports_; }
  int interventions() const;

  // Runs until a flag, the end of the episode, or abort.
  void run();
  // Executes the pending step as proposed. Throws ValidationError unless
  // awaiting a human at `step`.
  void approve(int step);
  // Executes `action_index` at `step`, which is the pending step or one of the
  // `window` steps before it (or, when finished, before the end).
  void correct(int step, int action_index, std::optional<std::string> content = std::nullopt);

  TaskTrace trace() const;
  // State for a client: status, current UI, candidates with normalized scores.
  nlohmann::json view() const;

 private:
  struct Decision {
    std::optional<int> index;
    std::optional<std::string> content;
    bool approved = false;
  };

  void rebuild(std::size_t keep);
  void advance();
  double threshold_for(double entropy) const;

  std::string id_;
  const sim::World* world_;
  sim::TaskSpec task_;
  BackendFactory factory_;
  SessionConfig config_;
  std::shared_ptr<const ScorerBackend> backend_;

  std::unique_ptr<sim::SimDevice> device_;
  std::unique_ptr<sim::DeviceEnvironment> env_;
  std::unique_ptr<sim::OracleCompletion> completion_;
  std::unique_ptr<sim::OracleScorer> oracle_;
  std::unique_ptr<Agent> agent_;

  std::vector<Decision> decisions_;
  std::vector<Correction> corrections_;
  std::vector<EntropyReport> reports_;
  std::vector<double> entropies_;
  std::optional<StepProposal> pending_;
  SessionStatus status_ = SessionStatus::Running;
};

// Stand-in for the human annotator: the oracle action at the latest step in
// the review window whose state is still on the oracle path. nullopt when
// there is none or the session is not awaiting a human.
std::optional<Correction> oracle_correction(const AnnotationSession& session);

// Runs the session, answering every flag with oracle_correction and giving up
// (leaving the session pending) after `max_interventions`.
void drive_with_oracle(AnnotationSession& session, int max_interventions = 100);

// ---------------------------------------------------------------- export

struct ExportResult {
  std::vector<TaskTrace> traces;
  std::vector<LabeledStep> steps;  // labels are executed actions
  std::vector<PreferencePair> pairs;
  nlohmann::json manifest;
};

// Throws DataError for unfinished sessions and held-out apps.
ExportResult export_sessions(std::span<const AnnotationSession* const> sessions, const sim::World& world);

// Writes <dir>/<session>.trace.jsonl, <dir>/pairs.jsonl and
// <dir>/manifest.json; returns the manifest.
nlohmann::json write_export(const ExportResult& result, const std::string& dir);

}  // namespace vagent

#endif  // VAGENT_ANNOTATION_HPP_
