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

#include <doctest.h>

#include <algorithm>
#include <random>

#include "support/sim_fixture.hpp"
#include "vagent/agent.hpp"
#include "vagent/error.hpp"
#include "vagent/sim/environment.hpp"

using namespace vagent;
using namespace vagent::sim;
using vagent::testing::bundled_world;

namespace {

struct CountingProvider : CompletionProvider {
  int calls = 0;
  int fail_first = 0;
  std::string complete(const Action& a, const UiState&, const WorkingMemory&, std::string_view) override {
    ++calls;
    if (fail_first-- > 0) throw CompletionError("refused " + a.descriptor);
    return "Notes";
  }
};

// Uniform random scores, reproducible per (seed, step, action).
FunctionScorer uniform_policy(std::uint64_t seed) {
  return FunctionScorer("uniform", [seed](const VerificationPrompt& p) {
    std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(p.context->step) << 20) ^
                        static_cast<std::uint64_t>(p.action_ref) ^ std::hash<std::string>{}(p.context->ui));
    return std::uniform_real_distribution<double>(0, 1)(rng);
  });
}

}  // namespace

TEST_CASE("agent: oracle backend succeeds with oracle-length traces on the catalog") {
  SimDevice dev(bundled_world());
  const OracleScorer oracle(dev);
  for (const auto& t : catalog(bundled_world(), 17, uniform_counts(bundled_world(), 8))) {
    CAPTURE(t.id);
    const TaskTrace trace = run_episode(dev, t, 1, oracle);
    CHECK(trace.outcome == Outcome::Success);
    CHECK(trace.records.size() == dev.oracle_path().size());
    for (const auto& r : trace.records) {
      CHECK(r.oracle == r.selected);
      CHECK(validate(r.space, r.state_before).empty());
      CHECK(r.entropy >= 0.0);
    }
    // One memory entry per executed step.
    if (!trace.records.empty()) CHECK(trace.records.back().memory_before.size() == trace.records.size() - 1);
  }
}

TEST_CASE("agent: budget exhaustion, terminal actions and failures") {
  SimDevice dev(bundled_world());
  const OracleScorer oracle(dev);
  const auto tasks = catalog(bundled_world(), 3, {{"notes", 1}});
  AgentConfig cfg;
  cfg.step_budget = 1;
  const TaskTrace short_run = run_episode(dev, tasks[0], 0, oracle, cfg);
  CHECK(short_run.outcome == Outcome::BudgetExhausted);
  CHECK(short_run.records.size() == 1);
  cfg.step_budget = 0;
  CHECK_THROWS_AS(run_episode(dev, tasks[0], 0, oracle, cfg), ValidationError);

  // Always choosing CompleteTask ends the episode at once without success.
  const FunctionScorer quitter("quit", [](const VerificationPrompt& p) {
    return p.action.type == ActionType::CompleteTask ? 1.0 : 0.0;
  });
  const TaskTrace quit = run_episode(dev, tasks[0], 0, quitter);
  CHECK(quit.outcome == Outcome::Failure);
  CHECK(quit.records.size() == 1);

  // An environment that rejects every action yields a failure with a cause.
  struct Broken : Environment {
    UiState s;
    const UiState& state() const override { return s; }
    void execute(const Action&) override { throw ExecutionError("device offline"); }
    bool success() const override { return false; }
  } broken;
  const FunctionScorer waiter("wait", [](const VerificationPrompt& p) {
    return p.action.type == ActionType::Wait ? 1.0 : 0.0;
  });
  CountingProvider provider;
  const TaskTrace failed = run_task(broken, "anything", waiter, provider);
  CHECK(failed.outcome == Outcome::Failure);
  CHECK(failed.cause.find("device offline") != std::string::npos);
  REQUIRE(failed.records.size() == 1);
  CHECK(failed.records[0].summary.size() > 0);
}

TEST_CASE("complete_action: fills only completion-requiring actions") {
  const auto task = instantiate(bundled_world(), "expenses", "add",
                                {{"amount", "307.01"}, {"category", "Health Care"}, {"note", "Pharmacy"}}, 5);
  CHECK(task.goal == "Record an expense of \"307.01\" dollars in \"Health Care\" for \"Pharmacy\".");
  SimDevice dev(bundled_world());
  dev.reset(task, 0);
  DeviceEnvironment env(dev);
  OracleCompletion oracle(dev);
  WorkingMemory mem;
  env.execute(dev.oracle_action());  // open
  env.execute(dev.oracle_action());  // add expense
  Action amount = dev.oracle_action();
  REQUIRE(amount.type == ActionType::TypeText);
  amount.content.reset();
  const Action filled = complete_action(amount, dev.state(), mem, task.goal, oracle);
  CHECK(filled.content == "307.01");
  CHECK(filled.rendered().find("\"307.01\"") != std::string::npos);

  CountingProvider counting;
  const auto space = extract(dev.state());
  const Action click = *std::find_if(space.actions.begin(), space.actions.end(),
                                     [](const Action& a) { return a.type == ActionType::Click; });
  REQUIRE(click.type == ActionType::Click);
  CHECK(complete_action(click, dev.state(), mem, task.goal, counting) == click);
  CHECK(counting.calls == 0);

  struct Empty : CompletionProvider {
    std::string complete(const Action&, const UiState&, const WorkingMemory&, std::string_view) override { return ""; }
  } empty;
  CHECK_THROWS_AS(complete_action(amount, dev.state(), mem, task.goal, empty), CompletionError);
  struct Throwing : CompletionProvider {
    std::string complete(const Action&, const UiState&, const WorkingMemory&, std::string_view) override {
      throw std::runtime_error("socket closed");
    }
  } throwing;
  CHECK_THROWS_AS(complete_action(amount, dev.state(), mem, task.goal, throwing), CompletionError);
}

TEST_CASE("agent: completion failure falls back once to the next-best action") {
  SimDevice dev(bundled_world());
  const auto tasks = catalog(bundled_world(), 3, {{"notes", 1}});
  dev.reset(tasks[0], 0);
  DeviceEnvironment env(dev);
  // OpenApp best, NavigateHome second.
  const FunctionScorer pref("pref", [](const VerificationPrompt& p) {
    if (p.action.type == ActionType::OpenApp) return 2.0;
    if (p.action.type == ActionType::NavigateHome) return 1.0;
    return 0.0;
  });
  CountingProvider provider;
  provider.fail_first = 1;
  Agent agent(env, pref, provider, {}, tasks[0].goal);
  const StepRecord& r = agent.step();
  CHECK(r.fallback);
  CHECK(r.space.actions[static_cast<std::size_t>(r.selected)].type == ActionType::NavigateHome);
  CHECK(r.proposed != r.selected);
  CHECK(r.error.empty());

  // Two consecutive failures: the step fails.
  provider.fail_first = 5;
  const FunctionScorer two("two", [](const VerificationPrompt& p) {
    return p.action.type == ActionType::OpenApp || p.action.type == ActionType::Answer ? 1.0 : 0.0;
  });
  dev.reset(tasks[0], 0);
  Agent agent2(env, two, provider, {}, tasks[0].goal);
  agent2.step();
  CHECK(agent2.done());
  CHECK(agent2.trace().outcome == Outcome::Failure);
}

TEST_CASE("agent: overrides execute the given action and are flagged") {
  SimDevice dev(bundled_world());
  const auto tasks = catalog(bundled_world(), 3, {{"clock", 1}});
  dev.reset(tasks[0], 0);
  DeviceEnvironment env(dev);
  OracleCompletion completion(dev);
  const OracleScorer oracle(dev);
  Agent agent(env, oracle, completion, {}, tasks[0].goal);
  const StepProposal p = agent.propose();
  CHECK(p.oracle == p.selected);
  CHECK_THROWS_AS(agent.commit(p, static_cast<int>(p.space.size())), ValidationError);
  const int wait = p.space.index_of(make_default_action(ActionType::Wait));
  const StepRecord& r = agent.commit(p, wait);
  CHECK(r.corrected);
  CHECK(r.selected == wait);
  CHECK(r.summary.find("no visible change") != std::string::npos);
  while (!agent.done()) agent.step();
  CHECK(agent.trace().outcome == Outcome::Success);
}

TEST_CASE("agent: action-history memory records rendered descriptors") {
  SimDevice dev(bundled_world());
  const OracleScorer oracle(dev);
  const auto task = instantiate(bundled_world(), "notes", "create", {{"title", "Groceries"}, {"body", "buy milk and eggs"}}, 1);
  AgentConfig cfg;
  cfg.memory = MemoryMode::ActionHistory;
  cfg.halt_on_success = false;
  const TaskTrace t = run_episode(dev, task, 0, oracle, cfg);
  CHECK(t.outcome == Outcome::Success);
  REQUIRE(t.records.size() == 6);  // five oracle steps then CompleteTask
  CHECK(t.records[1].memory_before == std::vector<std::string>{"open app \"Notes\""});
  CHECK(t.records[3].memory_before.back() == "input \"Groceries\" to \"Title\" (textbox 1)");
  CHECK(t.records.back().space.actions[static_cast<std::size_t>(t.records.back().selected)].type ==
        ActionType::CompleteTask);
}

TEST_CASE("trace: JSONL round trip and byte-identical reruns") {
  SimDevice dev(bundled_world());
  const OracleScorer oracle(dev);
  const FeatureScorer random = FeatureScorer::randomized(4);
  const auto tasks = catalog(bundled_world(), 8, uniform_counts(bundled_world(), 3));
  for (const auto& t : tasks) {
    for (const ScorerBackend* backend : {static_cast<const ScorerBackend*>(&oracle),
                                         static_cast<const ScorerBackend*>(&random)}) {
      AgentConfig cfg;
      cfg.step_budget = 8;
      const TaskTrace a = run_episode(dev, t, 2, *backend, cfg);
      const TaskTrace b = run_episode(dev, t, 2, *backend, cfg);
      const std::string text = trace_to_jsonl(a);
      CHECK(text == trace_to_jsonl(b));
      const TaskTrace back = trace_from_jsonl(text);
      CHECK(back == a);
      CHECK(trace_to_jsonl(back) == text);
    }
  }
  CHECK_THROWS_AS(trace_from_jsonl("{\"type\":\"step\"}\n"), ParseError);
  CHECK_THROWS_AS(trace_from_jsonl("{\"type\":\"header\",\"schema\":\"vagent.trace/1\",\"task\":\"t\",\"goal\":\"g\",\"config\":{}}\n"),
                  DataError);
  CHECK_THROWS_AS(trace_from_jsonl("not json\n"), ParseError);
}

TEST_CASE("agent: untrained scorer behaves like the uniform-random baseline") {
  SimDevice dev(bundled_world());
  const auto tasks = catalog(bundled_world(), 40, uniform_counts(bundled_world(), 40, false));
  REQUIRE(tasks.size() >= 200);
  int untrained_success = 0;
  int uniform_success = 0;
  double untrained_steps = 0;
  double uniform_steps = 0;
  for (int i = 0; i < 200; ++i) {
    const auto& t = tasks[static_cast<std::size_t>(i)];
    const FeatureScorer untrained = FeatureScorer::randomized(static_cast<std::uint64_t>(i));
    const FunctionScorer uniform = uniform_policy(static_cast<std::uint64_t>(i));
    const TaskTrace a = run_episode(dev, t, 0, untrained);
    const TaskTrace b = run_episode(dev, t, 0, uniform);
    untrained_success += a.outcome == Outcome::Success;
    uniform_success += b.outcome == Outcome::Success;
    untrained_steps += static_cast<double>(a.records.size());
    uniform_steps += static_cast<double>(b.records.size());
  }
  MESSAGE("success untrained " << untrained_success << "/200, uniform " << uniform_success
                               << "/200; mean steps " << untrained_steps / 200 << " vs " << uniform_steps / 200);
  CHECK(std::abs(untrained_success - uniform_success) <= 10);
  CHECK(untrained_success <= 20);
}
