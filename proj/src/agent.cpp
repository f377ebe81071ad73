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

#include "vagent/agent.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <Eigen/Core>

#include "vagent/error.hpp"
#include "vagent/math.hpp"

namespace vagent {

namespace {

using nlohmann::json;

// Best index other than `excluded`; ties go to the lowest index.
int next_best(const std::vector<double>& scores, int excluded) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (i == excluded) continue;
    if (best < 0 || scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

json optional_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Action complete_action(const Action& action, const UiState& state, const WorkingMemory& memory,
                       std::string_view goal, CompletionProvider& provider) {
  if (!requires_completion(action.type)) return action;
  std::string content;
  try {
    content = provider.complete(action, state, memory, goal);
  } catch (const CompletionError&) {
    throw;
  } catch (const std::exception& e) {
    throw CompletionError(std::string("completion provider failed: ") + e.what());
  }
  if (content.empty()) throw CompletionError("completion provider returned empty content for " + action.descriptor);
  Action out = action;
  out.content = std::move(content);
  return out;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::BudgetExhausted: return "budget_exhausted";
  }
  return "failure";
}

std::optional<Outcome> outcome_from_string(std::string_view name) {
  for (Outcome o : {Outcome::Success, Outcome::Failure, Outcome::BudgetExhausted}) {
    if (to_string(o) == name) return o;
  }
  return std::nullopt;
}

json AgentConfig::to_json() const {
  return {{"step_budget", step_budget},
          {"memory", std::string(vagent::to_string(memory))},
          {"halt_on_success", halt_on_success},
          {"grouped_scoring", grouped_scoring},
          {"prompt_version", prompt.version}};
}

Agent::Agent(Environment& env, const ScorerBackend& backend, CompletionProvider& completion, AgentConfig config,
             std::string goal, std::string task_id)
    : env_(&env), backend_(&backend), completion_(&completion), config_(std::move(config)) {
  if (config_.step_budget < 1) throw ValidationError("step budget must be at least 1");
  memory_.mode = config_.memory;
  trace_.task_id = std::move(task_id);
  trace_.goal = std::move(goal);
  trace_.config = config_.to_json();
}

StepProposal Agent::propose() const {
  StepProposal p;
  const int step = static_cast<int>(trace_.records.size());
  p.memory_before = memory_.entries;
  p.space = extract(env_->state(), step);
  auto ctx = std::make_shared<PromptContext>();
  ctx->goal = trace_.goal;
  ctx->memory = memory_.entries;
  ctx->state = env_->state();
  ctx->ui = streamline(ctx->state);
  ctx->step = step;
  p.prompts = build_prompts(std::move(ctx), p.space, config_.prompt);
  p.scores = config_.grouped_scoring ? score_scheduled(*backend_, p.prompts, schedule(p.prompts, p.space))
                                     : score_actions(*backend_, p.prompts);
  p.selected = select(p.scores);
  p.entropy = score_entropy(p.scores);
  if (const auto oracle = env_->oracle_action()) {
    const int idx = p.space.index_of(*oracle);
    if (idx >= 0) p.oracle = idx;
  }
  return p;
}

const StepRecord& Agent::commit(const StepProposal& proposal, std::optional<int> override_index,
                                std::optional<std::string> override_content) {
  if (done()) throw ExecutionError("episode already finished");
  const int n = static_cast<int>(proposal.space.size());
  if (override_index && (*override_index < 0 || *override_index >= n)) {
    throw ValidationError("override index " + std::to_string(*override_index) + " outside action space of size " +
                          std::to_string(n));
  }
  StepRecord rec;
  rec.step = static_cast<int>(trace_.records.size());
  rec.state_before = env_->state();
  rec.memory_before = proposal.memory_before;
  rec.space = proposal.space;
  rec.scores = proposal.scores;
  rec.proposed = proposal.selected;
  rec.selected = override_index.value_or(proposal.selected);
  rec.corrected = override_index.has_value() && *override_index != proposal.selected;
  rec.oracle = proposal.oracle;
  rec.entropy = proposal.entropy;

  const Action& chosen = rec.space.actions[static_cast<std::size_t>(rec.selected)];
  Action action = chosen;
  if (override_content && requires_completion(chosen.type)) {
    if (override_content->empty()) throw ValidationError("override content must not be empty");
    action.content = *override_content;
  } else {
    try {
      action = complete_action(chosen, rec.state_before, memory_, trace_.goal, *completion_);
    } catch (const CompletionError& first) {
      const int alt = override_index ? -1 : next_best(rec.scores.scores, rec.selected);
      bool recovered = false;
      if (alt >= 0) {
        try {
          action = complete_action(rec.space.actions[static_cast<std::size_t>(alt)], rec.state_before, memory_,
                                   trace_.goal, *completion_);
          rec.selected = alt;
          rec.fallback = true;
          recovered = true;
        } catch (const CompletionError&) {
        }
      }
      if (!recovered) {
        rec.error = first.what();
        failed_ = true;
      }
    }
  }

  if (!failed_) {
    rec.completed_content = action.content;
    try {
      env_->execute(action);
    } catch (const ExecutionError& e) {
      rec.error = e.what();
      failed_ = true;
    }
  }
  rec.state_after = env_->state();
  const UiDelta delta = diff_ui(rec.state_before, rec.state_after);
  const Action& executed = failed_ ? rec.space.actions[static_cast<std::size_t>(rec.selected)] : action;
  update_memory(memory_, executed, rec.state_before, rec.state_after, delta, trace_.goal, config_.summarizer);
  rec.summary = memory_.entries.back();
  terminal_ = is_terminal(executed.type) && !failed_;
  if (failed_ && trace_.cause.empty()) trace_.cause = rec.error;
  trace_.records.push_back(std::move(rec));
  return trace_.records.back();
}

const StepRecord& Agent::step() { return commit(propose()); }

bool Agent::done() const {
  if (failed_ || terminal_) return true;
  if (config_.halt_on_success && env_->success()) return true;
  return static_cast<int>(trace_.records.size()) >= config_.step_budget;
}

TaskTrace Agent::trace() const {
  TaskTrace t = trace_;
  if (env_->success()) {
    t.outcome = Outcome::Success;
    t.cause.clear();
  } else if (failed_) {
    t.outcome = Outcome::Failure;
  } else if (terminal_) {
    t.outcome = Outcome::Failure;
    t.cause = "terminated without reaching the goal";
  } else if (static_cast<int>(t.records.size()) >= config_.step_budget) {
    t.outcome = Outcome::BudgetExhausted;
    t.cause = "step budget of " + std::to_string(config_.step_budget) + " exhausted";
  } else {
    t.outcome = Outcome::Failure;
    t.cause = "episode unfinished";
  }
  return t;
}

TaskTrace run_task(Environment& env, std::string_view goal, const ScorerBackend& backend,
                   CompletionProvider& completion, const AgentConfig& config, std::string_view task_id) {
  Agent agent(env, backend, completion, config, std::string(goal), std::string(task_id));
  while (!agent.done()) agent.step();
  return agent.trace();
}

// ---------------------------------------------------------------- JSONL

json step_to_json(const StepRecord& r) {
  return {{"type", "step"},
          {"step", r.step},
          {"state_before", ui_to_json(r.state_before)},
          {"state_after", ui_to_json(r.state_after)},
          {"memory_before", r.memory_before},
          {"space", space_to_json(r.space)},
          {"scores", r.scores.scores},
          {"normalized", r.scores.normalized},
          {"backend", r.scores.backend},
          {"selected", r.selected},
          {"proposed", r.proposed},
          {"oracle", optional_json(r.oracle)},
          {"completed_content", r.completed_content ? json(*r.completed_content) : json(nullptr)},
          {"fallback", r.fallback},
          {"corrected", r.corrected},
          {"entropy", r.entropy},
          {"summary", r.summary},
          {"error", r.error}};
}

StepRecord step_from_json(const json& j) {
  try {
    StepRecord r;
    r.step = j.at("step").get<int>();
    r.state_before = ui_from_json(j.at("state_before"));
    r.state_after = ui_from_json(j.at("state_after"));
    r.memory_before = j.at("memory_before").get<std::vector<std::string>>();
    r.space = space_from_json(j.at("space"));
    r.scores.scores = j.at("scores").get<std::vector<double>>();
    r.scores.normalized = j.at("normalized").get<std::vector<double>>();
    r.scores.backend = j.at("backend").get<std::string>();
    r.selected = j.at("selected").get<int>();
    r.proposed = j.at("proposed").get<int>();
    if (!j.at("oracle").is_null()) r.oracle = j["oracle"].get<int>();
    if (!j.at("completed_content").is_null()) r.completed_content = j["completed_content"].get<std::string>();
    r.fallback = j.at("fallback").get<bool>();
    r.corrected = j.at("corrected").get<bool>();
    r.entropy = j.at("entropy").get<double>();
    r.summary = j.at("summary").get<std::string>();
    r.error = j.at("error").get<std::string>();
    const int n = static_cast<int>(r.space.size());
    if (r.selected < 0 || r.selected >= n || r.proposed < 0 || r.proposed >= n) {
      throw DataError("step " + std::to_string(r.step) + ": selected index outside the action space");
    }
    if (r.scores.scores.size() != r.space.size()) {
      throw DataError("step " + std::to_string(r.step) + ": score count does not match the action space");
    }
    if (r.entropy < 0) throw DataError("step " + std::to_string(r.step) + ": negative entropy");
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed step record: ") + e.what());
  }
}

std::string trace_to_jsonl(const TaskTrace& t) {
  std::string out;
  out += json{{"type", "header"}, {"schema", "vagent.trace/1"}, {"task", t.task_id}, {"goal", t.goal}, {"config", t.config}}
             .dump();
  out += '\n';
  for (const auto& r : t.records) {
    out += step_to_json(r).dump();
    out += '\n';
  }
  out += json{{"type", "footer"}, {"outcome", std::string(to_string(t.outcome))}, {"cause", t.cause},
              {"steps", t.records.size()}}
             .dump();
  out += '\n';
  return out;
}

TaskTrace trace_from_jsonl(std::string_view text) {
  TaskTrace t;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool header = false;
  bool footer = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (footer) throw ParseError("content after trace footer", line_no, 1);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line_no, 1);
    }
    const std::string type = j.value("type", "");
    if (!header) {
      if (type != "header") throw ParseError("trace must start with a header line", line_no, 1);
      if (j.value("schema", "") != "vagent.trace/1") throw DataError("unsupported trace schema");
      t.task_id = j.at("task").get<std::string>();
      t.goal = j.at("goal").get<std::string>();
      t.config = j.at("config");
      header = true;
    } else if (type == "step") {
      t.records.push_back(step_from_json(j));
    } else if (type == "footer") {
      const auto o = outcome_from_string(j.at("outcome").get<std::string>());
      if (!o) throw DataError("unknown outcome in trace footer");
      t.outcome = *o;
      t.cause = j.at("cause").get<std::string>();
      if (j.at("steps").get<std::size_t>() != t.records.size()) {
        throw DataError("trace footer step count does not match the records");
      }
      footer = true;
    } else {
      throw ParseError("unknown trace line type '" + type + "'", line_no, 1);
    }
  }
  if (!header || !footer) throw DataError("truncated trace");
  return t;
}

void save_trace(const TaskTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << trace_to_jsonl(trace);
}

TaskTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return trace_from_jsonl(ss.str());
}

double completion_fraction(const std::vector<TaskTrace>& traces) {
  std::size_t total = 0;
  std::size_t needed = 0;
  for (const auto& t : traces) {
    for (const auto& r : t.records) {
      ++total;
      needed += requires_completion(r.space.actions[static_cast<std::size_t>(r.selected)].type) ? 1 : 0;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(needed) / static_cast<double>(total);
}

}  // namespace vagent
