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

#include "support/sim_fixture.hpp"
#include "vagent/error.hpp"
#include "vagent/sim/environment.hpp"
#include "vagent/sim/evaluation.hpp"
#include "vagent/training.hpp"

using namespace vagent;
using namespace vagent::sim;
using vagent::testing::bundled_world;
using vagent::testing::reverse_of;

namespace {

// Oracle on the path; off the path, the reverse of the last executed action.
class RecoveringScorer final : public ScorerBackend {
 public:
  RecoveringScorer(const SimDevice& dev, const Agent*& agent) : dev_(dev), agent_(agent) {}
  std::vector<double> score_batch(std::span<const VerificationPrompt> prompts) const override {
    std::vector<double> out;
    std::optional<Action> want;
    if (dev_.on_path()) {
      want = dev_.oracle_action();
    } else if (agent_ != nullptr && !agent_->records().empty()) {
      const auto& r = agent_->records().back();
      want = reverse_of(r.space.actions[static_cast<std::size_t>(r.selected)]);
    }
    for (const auto& p : prompts) out.push_back(want && p.action.same_choice(*want) ? 1.0 : 0.0);
    return out;
  }
  std::string descriptor() const override { return "recovering"; }

 private:
  const SimDevice& dev_;
  const Agent*& agent_;
};

}  // namespace

TEST_CASE("evaluate: oracle backend without injection succeeds everywhere") {
  SimDevice dev(bundled_world());
  const auto tasks = catalog(bundled_world(), 5, uniform_counts(bundled_world(), 2));
  const OracleScorer oracle(dev);
  EvalConfig cfg;
  cfg.episodes = 30;
  std::vector<TaskTrace> traces;
  const auto s = evaluate(dev, tasks, oracle, cfg, &traces);
  CHECK(s.episodes == 30);
  CHECK(s.successes == 30);
  CHECK(s.success_rate() == 1.0);
  CHECK(s.on_path_back == 0);
  CHECK(traces.size() == 30);
  CHECK(s.to_json()["success_rate"] == 1.0);
  cfg.episodes = 0;
  CHECK_THROWS_AS(evaluate(dev, tasks, oracle, cfg), ValidationError);
}

TEST_CASE("evaluate: injected first step leaves the path and is flagged") {
  SimDevice dev(bundled_world());
  const auto tasks = catalog(bundled_world(), 5, uniform_counts(bundled_world(), 2, false));
  const OracleScorer oracle(dev);
  int injected = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    TaskTrace t;
    if (!run_injected(dev, tasks[i], 3, i, oracle, {}, t)) continue;
    ++injected;
    REQUIRE(t.records.size() >= 1);
    CHECK(t.records[0].corrected);
    CHECK(t.records[0].oracle.has_value());
    CHECK(t.records[0].selected != *t.records[0].oracle);
    if (t.records.size() > 1) CHECK_FALSE(t.records[1].oracle.has_value());
  }
  CHECK(injected == static_cast<int>(tasks.size()));
}

TEST_CASE("evaluate: a scorer that reverses mistakes recovers from injection") {
  SimDevice dev(bundled_world());
  const auto tasks = catalog(bundled_world(), 6, uniform_counts(bundled_world(), 2, false));
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    CAPTURE(tasks[i].id);
    dev.reset(tasks[i], 4);
    DeviceEnvironment env(dev);
    OracleCompletion completion(dev);
    const Agent* current = nullptr;
    RecoveringScorer scorer(dev, current);
    Agent agent(env, scorer, completion, {}, tasks[i].goal, tasks[i].id);
    current = &agent;
    const auto first = agent.propose();
    const auto wrong = wrong_branches(dev, first.space);
    REQUIRE_FALSE(wrong.empty());
    const int w = wrong[i % wrong.size()];
    const Action& a = first.space.actions[static_cast<std::size_t>(w)];
    std::optional<std::string> content;
    if (requires_completion(a.type)) content = branch_content(a, dev, static_cast<std::uint64_t>(w));
    agent.commit(first, w, content);
    while (!agent.done()) agent.step();
    const auto trace = agent.trace();
    CHECK(trace.outcome == Outcome::Success);
    CHECK(trace.records.size() == dev.oracle_path().size() + 2);
  }
}

TEST_CASE("on-path NavigateBack accounting") {
  TaskTrace t;
  StepRecord r;
  r.space.actions = {make_default_action(ActionType::NavigateBack), make_default_action(ActionType::NavigateHome)};
  r.oracle = 1;
  r.proposed = 0;
  t.records.push_back(r);   // on path, wrong back
  r.oracle = 0;
  t.records.push_back(r);   // on path, back is right
  r.oracle.reset();
  t.records.push_back(r);   // off path
  r.oracle = 1;
  r.corrected = true;
  t.records.push_back(r);   // override
  int steps = 0, back = 0;
  count_on_path_back(t, steps, back);
  CHECK(steps == 2);
  CHECK(back == 1);
}
