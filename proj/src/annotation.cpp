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

#include "vagent/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "vagent/error.hpp"
#include "vagent/math.hpp"

namespace vagent {

using nlohmann::json;

// ---------------------------------------------------------------- triage

double compute_threshold(std::span<const double> entropies) {
  if (entropies.empty()) throw ValidationError("threshold of an empty entropy list");
  return lower_median(std::vector<double>(entropies.begin(), entropies.end()));
}

std::vector<EntropyReport> triage(const TaskTrace& trace, double threshold) {
  std::vector<EntropyReport> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    const double h = score_entropy(r.scores);
    out.push_back({r.step, h, h > threshold, threshold});
  }
  return out;
}

bool step_correct(const StepRecord& record) {
  if (!record.oracle) return false;
  const auto& a = record.space.actions;
  return a[static_cast<std::size_t>(record.proposed)].same_choice(a[static_cast<std::size_t>(*record.oracle)]);
}

json TruthTable::to_json() const {
  return {{"tp", tp}, {"tn", tn}, {"fp", fp}, {"fn", fn}, {"accuracy", accuracy()}, {"steps", steps}};
}

TruthTable truth_table(std::span<const bool> flags, std::span<const bool> correct) {
  if (flags.size() != correct.size()) {
    throw ValidationError("truth table: " + std::to_string(flags.size()) + " flags for " +
                          std::to_string(correct.size()) + " labels");
  }
  if (flags.empty()) throw ValidationError("truth table of no steps");
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) {
      ++(correct[i] ? fp : tp);
    } else {
      ++(correct[i] ? tn : fn);
    }
  }
  const double n = static_cast<double>(flags.size());
  TruthTable t;
  t.tp = static_cast<double>(tp) / n;
  t.tn = static_cast<double>(tn) / n;
  t.fp = static_cast<double>(fp) / n;
  t.fn = static_cast<double>(fn) / n;
  t.steps = flags.size();
  return t;
}

double roc_auc(std::span<const double> score, std::span<const bool> positive) {
  if (score.size() != positive.size()) throw ValidationError("roc_auc: length mismatch");
  // Average ranks over ties, then the Mann-Whitney U statistic.
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && score[order[j]] == score[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum += avg;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = score.size() - pos;
  if (pos == 0 || neg == 0) return std::numeric_limits<double>::quiet_NaN();
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::vector<StepVerdict> score_steps(const ScorerBackend& backend, std::span<const LabeledStep> steps,
                                     const PromptTemplate& tmpl) {
  std::vector<StepVerdict> out;
  out.reserve(steps.size());
  for (const auto& s : steps) {
    const auto prompts = build_prompts(s.context, s.space, tmpl);
    const ScoreVector v = score_actions(backend, prompts);
    const auto& a = s.space.actions;
    const bool ok = a[static_cast<std::size_t>(select(v))].same_choice(a[static_cast<std::size_t>(s.label)]);
    out.push_back({score_entropy(v), ok});
  }
  return out;
}

// ---------------------------------------------------------------- sessions

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Running: return "running";
    case SessionStatus::AwaitingHuman: return "awaiting_human";
    case SessionStatus::Finished: return "finished";
    case SessionStatus::Aborted: return "aborted";
  }
  return "?";
}

std::string_view to_string(ThresholdMode mode) { return mode == ThresholdMode::Fixed ? "fixed" : "rolling"; }

std::optional<ThresholdMode> threshold_mode_from_string(std::string_view name) {
  if (name == "fixed") return ThresholdMode::Fixed;
  if (name == "rolling") return ThresholdMode::Rolling;
  return std::nullopt;
}

BackendFactory shared_backend(std::shared_ptr<const ScorerBackend> backend) {
  return [backend = std::move(backend)](const sim::SimDevice&) { return backend; };
}

namespace {

class NoisyOracle final : public ScorerBackend {
 public:
  NoisyOracle(const sim::SimDevice& device, std::uint64_t seed, double sd, std::vector<int> steps)
      : oracle_(device), noisy_(oracle_, seed, sd, [steps = std::move(steps)](int step) {
          return steps.empty() || std::find(steps.begin(), steps.end(), step) != steps.end();
        }) {}

  std::vector<double> score_batch(std::span<const VerificationPrompt> prompts) const override {
    return noisy_.score_batch(prompts);
  }
  std::string descriptor() const override { return noisy_.descriptor(); }

 private:
  sim::OracleScorer oracle_;
  NoisyScorer noisy_;
};

}  // namespace

BackendFactory noisy_oracle_backend(std::uint64_t seed, double noise_sd, std::vector<int> steps) {
  return [=](const sim::SimDevice& device) {
    return std::make_shared<const NoisyOracle>(device, seed, noise_sd, steps);
  };
}

AnnotationSession::AnnotationSession(std::string id, const sim::World& world, sim::TaskSpec task,
                                     BackendFactory backend, SessionConfig config)
    : id_(std::move(id)), world_(&world), task_(std::move(task)), factory_(std::move(backend)), config_(config) {
  if (config_.window < 0) throw ValidationError("review window must be non-negative");
  if (config_.mode == ThresholdMode::Fixed && !std::isfinite(config_.threshold)) {
    throw ValidationError("fixed threshold must be finite");
  }
  rebuild(0);
}

std::optional<int> AnnotationSession::pending() const {
  if (!pending_) return std::nullopt;
  return static_cast<int>(agent_->records().size());
}

int AnnotationSession::interventions() const { return static_cast<int>(corrections_.size()); }

void AnnotationSession::rebuild(std::size_t keep) {
  device_ = std::make_unique<sim::SimDevice>(*world_);
  device_->reset(task_, config_.env_seed);
  env_ = std::make_unique<sim::DeviceEnvironment>(*device_);
  completion_ = std::make_unique<sim::OracleCompletion>(*device_);
  oracle_ = std::make_unique<sim::OracleScorer>(*device_);
  backend_ = factory_ ? factory_(*device_) : nullptr;
  const ScorerBackend& backend = backend_ ? *backend_ : *oracle_;
  agent_ = std::make_unique<Agent>(*env_, backend, *completion_, config_.agent, task_.goal, task_.id);
  decisions_.resize(std::min(keep, decisions_.size()));
  for (const auto& d : decisions_) agent_->commit(agent_->propose(), d.index, d.content);
  reports_.resize(decisions_.size());
  entropies_.resize(decisions_.size());
  std::erase_if(corrections_, [&](const Correction& c) { return c.step >= static_cast<int>(decisions_.size()); });
  pending_.reset();
  status_ = SessionStatus::Running;
}

double AnnotationSession::threshold_for(double entropy) const {
  if (config_.mode == ThresholdMode::Fixed) return config_.threshold;
  std::vector<double> all = entropies_;
  all.push_back(entropy);
  return lower_median(std::move(all));
}

void AnnotationSession::advance() {
  while (!agent_->done()) {
    StepProposal p = agent_->propose();
    const int step = static_cast<int>(agent_->records().size());
    const double thr = threshold_for(p.entropy);
    const bool flagged = p.entropy > thr;
    entropies_.push_back(p.entropy);
    reports_.push_back({step, p.entropy, flagged, thr});
    if (flagged) {
      pending_ = std::move(p);
      status_ = SessionStatus::AwaitingHuman;
      return;
    }
    agent_->commit(p);
    decisions_.push_back({});
  }
  status_ = agent_->trace().outcome == Outcome::Success ? SessionStatus::Finished : SessionStatus::Aborted;
}

void AnnotationSession::run() {
  if (status_ == SessionStatus::Running) advance();
}

void AnnotationSession::approve(int step) {
  if (!pending_ || step != *pending()) {
    throw ValidationError("session " + id_ + ": step " + std::to_string(step) + " is not awaiting approval");
  }
  const StepRecord& rec = agent_->commit(*pending_);
  decisions_.push_back({std::nullopt, std::nullopt, true});
  corrections_.push_back({step, rec.selected, rec.completed_content, true});
  pending_.reset();
  status_ = SessionStatus::Running;
  advance();
}

void AnnotationSession::correct(int step, int action_index, std::optional<std::string> content) {
  if (status_ == SessionStatus::Running) throw ValidationError("session " + id_ + " is running");
  const int recorded = static_cast<int>(agent_->records().size());
  const int head = pending_ ? recorded : recorded - 1;
  const int lo = std::max(0, head - config_.window);
  if (step < lo || step > head) {
    throw ValidationError("session " + id_ + ": step " + std::to_string(step) + " is outside the review window [" +
                          std::to_string(lo) + ", " + std::to_string(head) + "]");
  }
  const ActionSpace& space = step == recorded ? pending_->space
                                              : agent_->records()[static_cast<std::size_t>(step)].space;
  if (action_index < 0 || action_index >= static_cast<int>(space.size())) {
    throw ValidationError("action index " + std::to_string(action_index) + " outside a space of " +
                          std::to_string(space.size()));
  }
  if (content && content->empty()) throw ValidationError("correction content must not be empty");

  std::optional<StepProposal> proposal;
  if (step == recorded) {
    proposal = std::move(pending_);
    pending_.reset();
  } else {
    rebuild(static_cast<std::size_t>(step));
    proposal = agent_->propose();
    const double thr = threshold_for(proposal->entropy);
    entropies_.push_back(proposal->entropy);
    reports_.push_back({step, proposal->entropy, proposal->entropy > thr, thr});
  }
  agent_->commit(*proposal, action_index, content);
  decisions_.push_back({action_index, content, false});
  corrections_.push_back({step, action_index, content, false});
  status_ = SessionStatus::Running;
  advance();
}

TaskTrace AnnotationSession::trace() const {
  TaskTrace t = agent_->trace();
  t.config["session"] = id_;
  return t;
}

json AnnotationSession::view() const {
  const auto& records = agent_->records();
  json j = {{"schema", "vagent.session/1"},
            {"session_id", id_},
            {"task_id", task_.id},
            {"goal", task_.goal},
            {"app", task_.app},
            {"status", to_string(status_)},
            {"step", records.size()},
            {"ui", streamline(device_->state())},
            {"threshold_mode", to_string(config_.mode)},
            {"window", config_.window},
            {"interventions", interventions()}};
  j["pending"] = pending_ ? json(*pending()) : json(nullptr);
  if (pending_) {
    const auto& r = reports_.back();
    json cands = json::array();
    for (std::size_t i = 0; i < pending_->space.size(); ++i) {
      cands.push_back({{"index", i},
                       {"descriptor", pending_->space.actions[i].descriptor},
                       {"type", to_string(pending_->space.actions[i].type)},
                       {"score", pending_->scores.scores[i]},
                       {"prob", pending_->scores.normalized[i]}});
    }
    j["candidates"] = std::move(cands);
    j["selected"] = pending_->selected;
    j["entropy"] = r.entropy;
    j["threshold"] = r.threshold;
    j["flagged"] = r.flagged;
  }
  json history = json::array();
  const int head = static_cast<int>(records.size());
  for (int s = std::max(0, head - config_.window - 1); s < head; ++s) {
    const auto& r = records[static_cast<std::size_t>(s)];
    const auto& a = r.space.actions[static_cast<std::size_t>(r.selected)];
    Action executed = a;
    executed.content = r.completed_content;
    history.push_back({{"step", s},
                       {"executed", executed.rendered()},
                       {"entropy", r.entropy},
                       {"corrected", r.corrected},
                       {"summary", r.summary}});
  }
  j["history"] = std::move(history);
  json corr = json::array();
  for (const auto& c : corrections_) {
    corr.push_back({{"step", c.step},
                    {"action_index", c.action_index},
                    {"content", c.content ? json(*c.content) : json(nullptr)},
                    {"approved", c.approved}});
  }
  j["corrections"] = std::move(corr);
  if (status_ == SessionStatus::Finished || status_ == SessionStatus::Aborted) {
    j["outcome"] = to_string(agent_->trace().outcome);
  }
  return j;
}

std::optional<Correction> oracle_correction(const AnnotationSession& session) {
  const auto pending = session.pending();
  if (!pending) return std::nullopt;
  const TaskTrace trace = session.trace();
  sim::SimDevice dev(session.world());
  dev.reset(session.task(), session.config().env_seed);
  // Replayed states for steps 0..pending; entry k is the state before step k.
  std::vector<sim::SimDevice> states;
  states.reserve(trace.records.size() + 1);
  states.push_back(dev);
  for (const auto& r : trace.records) {
    Action a = r.space.actions[static_cast<std::size_t>(r.selected)];
    a.content = r.completed_content;
    dev.execute(a);
    states.push_back(dev);
  }
  const int lo = std::max(0, *pending - session.config().window);
  for (int step = *pending; step >= lo; --step) {
    const auto& d = states[static_cast<std::size_t>(step)];
    if (!d.on_path()) continue;
    const ActionSpace space = extract(d.state(), step);
    const int idx = space.index_of(d.oracle_action());
    if (idx < 0) continue;
    const Action& a = space.actions[static_cast<std::size_t>(idx)];
    Correction c{step, idx, std::nullopt, false};
    if (requires_completion(a.type)) c.content = d.complete(a);
    return c;
  }
  return std::nullopt;
}

void drive_with_oracle(AnnotationSession& session, int max_interventions) {
  session.run();
  for (int n = 0; n < max_interventions && session.status() == SessionStatus::AwaitingHuman; ++n) {
    const auto c = oracle_correction(session);
    if (!c) return;
    session.correct(c->step, c->action_index, c->content);
  }
}

// ---------------------------------------------------------------- export

ExportResult export_sessions(std::span<const AnnotationSession* const> sessions, const sim::World& world) {
  ExportResult out;
  json listed = json::array();
  for (const auto* s : sessions) {
    if (s->status() != SessionStatus::Finished) {
      throw DataError("session " + s->id() + " is " + std::string(to_string(s->status())) + ", not finished");
    }
    if (world.app(s->task().app).held_out) {
      throw DataError("session " + s->id() + " annotates held-out app '" + s->task().app + "'");
    }
  }
  for (const auto* s : sessions) {
    TaskTrace t = s->trace();
    auto steps = labeled_steps(t, LabelSource::Executed);
    auto pairs = build_process_pairs(steps);
    listed.push_back({{"session_id", s->id()},
                      {"task_id", s->task().id},
                      {"labeled_steps", steps.size()},
                      {"pairs", pairs.size()},
                      {"interventions", s->interventions()}});
    out.steps.insert(out.steps.end(), steps.begin(), steps.end());
    out.pairs.insert(out.pairs.end(), pairs.begin(), pairs.end());
    out.traces.push_back(std::move(t));
  }
  out.manifest = {{"schema", "vagent.export/1"},
                  {"sessions", std::move(listed)},
                  {"labeled_steps", out.steps.size()},
                  {"pairs", out.pairs.size()}};
  return out;
}

json write_export(const ExportResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
  json manifest = result.manifest;
  json files = json::array();
  for (std::size_t i = 0; i < result.traces.size(); ++i) {
    const auto& t = result.traces[i];
    const std::string name = t.config.value("session", "trace" + std::to_string(i)) + ".trace.jsonl";
    save_trace(t, (fs::path(dir) / name).string());
    files.push_back(name);
  }
  save_pairs(result.pairs, (fs::path(dir) / "pairs.jsonl").string());
  files.push_back("pairs.jsonl");
  manifest["files"] = std::move(files);
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw DataError("cannot write manifest in " + dir);
  out << manifest.dump(2) << '\n';
  return manifest;
}

}  // namespace vagent
