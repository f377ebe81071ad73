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
#include <set>

#include "support/sim_fixture.hpp"
#include "vagent/error.hpp"
#include "vagent/sim/device.hpp"

using namespace vagent;
using namespace vagent::sim;
using vagent::testing::bundled_world;

namespace {

std::vector<TaskSpec> full_catalog(std::uint64_t seed = 7, int per_app = 10) {
  return catalog(bundled_world(), seed, uniform_counts(bundled_world(), per_app));
}

const UiElement* find_by_label(const UiState& s, const std::string& label) {
  for (const auto* e : visible_elements(s)) {
    if (e->label() == label || e->content_desc == label) return e;
  }
  return nullptr;
}

Action action_on(const UiState& s, ActionType type, const std::string& label) {
  const UiElement* e = find_by_label(s, label);
  REQUIRE_MESSAGE(e != nullptr, label);
  for (const auto& a : extract(s).actions) {
    if (a.type == type && a.target == e->id) return a;
  }
  FAIL("no action on " << label);
  return {};
}

Action open_app(const std::string& name) {
  Action a = make_default_action(ActionType::OpenApp);
  a.content = name;
  return a;
}

}  // namespace

TEST_CASE("world: bundled apps load with one launcher first") {
  const auto& w = bundled_world();
  REQUIRE(w.apps().size() == 8);
  CHECK(w.apps().front().launcher);
  std::set<std::string> held;
  for (const auto& a : w.apps()) {
    if (a.held_out) held.insert(a.id);
  }
  CHECK(held == std::set<std::string>{"files", "messaging"});
  CHECK(w.find_app("notes") == w.find_app("NOTES"));
  CHECK(w.find_app("Messages")->id == "messaging");
  CHECK(w.find_app("camera") == nullptr);
}

TEST_CASE("world: definition errors are reported") {
  using nlohmann::json;
  const json pools = json::object();
  const json launcher = json::parse(R"({"app":"l","launcher":true,"initial":"h","screens":{"h":{"elements":[]}}})");
  auto app = [](const std::string& body) { return json::parse(body); };
  CHECK_THROWS_AS(World::from_json({launcher, app(R"({"app":"a","initial":"s","screens":{"s":{"elements":[
      {"key":"b","role":"button","flags":"c"}],"on":{"click:b":[{"push":"nowhere"}]}}}})")}, pools),
                  ValidationError);
  CHECK_THROWS_AS(World::from_json({launcher, app(R"({"app":"a","initial":"s","screens":{"s":{"elements":[]},
      "orphan":{"elements":[]}}})")}, pools),
                  ValidationError);
  CHECK_THROWS_AS(World::from_json({launcher, app(R"({"app":"a","initial":"s","screens":{"s":{"elements":[
      {"key":"b","role":"label","flags":"e"}]}}})")}, pools),
                  DataError);
  CHECK_THROWS_AS(World::from_json({app(R"({"app":"a","initial":"s","screens":{"s":{}}})")}, pools), ValidationError);
  CHECK_THROWS_AS(World::from_json({launcher, launcher}, pools), ValidationError);
  CHECK_NOTHROW(World::from_json({launcher}, pools));
}

TEST_CASE("catalog: counts, distinct parameters, determinism, held-out flags") {
  const auto& w = bundled_world();
  const auto tasks = catalog(w, 11, {{"notes", 10}});
  REQUIRE(tasks.size() == 10);
  std::set<std::string> sigs;
  for (const auto& t : tasks) {
    CHECK(t.app == "notes");
    CHECK_FALSE(t.held_out);
    sigs.insert(t.template_id + nlohmann::json(t.params).dump());
  }
  CHECK(sigs.size() == 10);

  const auto again = catalog(w, 11, {{"notes", 10}});
  for (std::size_t i = 0; i < tasks.size(); ++i) CHECK(task_to_json(tasks[i]) == task_to_json(again[i]));

  // Different catalog seeds draw different goal parameters.
  const auto other = catalog(w, 12, {{"notes", 10}});
  int differing = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) differing += tasks[i].goal != other[i].goal;
  CHECK(differing > 0);

  for (const auto& t : full_catalog()) {
    CHECK(t.held_out == (t.app == "files" || t.app == "messaging"));
    CHECK(task_from_json(task_to_json(t)).id == t.id);
    CHECK(task_to_json(task_from_json(task_to_json(t))) == task_to_json(t));
  }
  CHECK(catalog(w, 1, {{"notes", 0}}).empty());
  CHECK_THROWS_AS(catalog(w, 1, {{"notes", -1}}), ValidationError);
  CHECK_THROWS_AS(find_task(tasks, "notes.nothing#0"), DataError);
  CHECK(find_task(tasks, tasks[3].id).goal == tasks[3].goal);
}

TEST_CASE("reset: deterministic per (task, seed), home screen first") {
  const auto tasks = full_catalog();
  SimDevice a(bundled_world()), b(bundled_world());
  for (const auto& t : tasks) {
    const UiState sa = a.reset(t, 5);
    const UiState sb = b.reset(t, 5);
    CHECK(sa == sb);
    CHECK(a.snapshot_key() == b.snapshot_key());
    CHECK(sa.app_id == "launcher");
    CHECK(a.stack_depth() == 1);
  }
  // Filler content varies with the seed.
  int differing = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    a.reset(tasks[0], s);
    b.reset(tasks[0], s + 100);
    differing += a.snapshot_key() != b.snapshot_key();
  }
  CHECK(differing > 0);
}

TEST_CASE("oracle: succeeds on every catalog task within its bound") {
  SimDevice dev(bundled_world());
  for (std::uint64_t seed : {0ULL, 3ULL}) {
    for (const auto& t : full_catalog(seed * 13 + 1)) {
      CAPTURE(t.id);
      dev.reset(t, seed);
      CHECK(dev.oracle_action().type == ActionType::OpenApp);
      int steps = 0;
      while (!dev.success() && steps <= t.max_oracle_length) {
        const Action a = dev.oracle_action();
        // The oracle action is always a member of the extracted space.
        CHECK(extract(dev.state()).index_of(a) >= 0);
        dev.execute(a);
        ++steps;
      }
      CHECK(dev.success());
      CHECK(steps <= t.max_oracle_length);
      CHECK(steps == static_cast<int>(dev.oracle_path().size()));
      CHECK(dev.oracle_action().type == ActionType::CompleteTask);
    }
  }
}

TEST_CASE("oracle: create-note path and off-path error") {
  const auto tasks = catalog(bundled_world(), 2, {{"notes", 5}});
  const TaskSpec& create = tasks[0];
  REQUIRE(create.template_id == "create");
  SimDevice dev(bundled_world());
  dev.reset(create, 0);
  Action first = dev.oracle_action();
  CHECK(first.type == ActionType::OpenApp);
  CHECK(dev.complete(first) == "Notes");
  dev.execute(open_app("Notes"));
  dev.execute(action_on(dev.state(), ActionType::Click, "New note"));
  Action title = dev.oracle_action();
  REQUIRE(title.type == ActionType::TypeText);
  CHECK(dev.complete(title) == create.params.at("title"));
  title.content = create.params.at("title");
  dev.execute(title);
  Action body = dev.oracle_action();
  body.content = dev.complete(body);
  dev.execute(body);
  const Action save = dev.oracle_action();
  CHECK(save.type == ActionType::Click);
  CHECK(find_element(dev.state(), *save.target)->label() == "Save");
  dev.execute(save);
  CHECK(dev.success());

  dev.reset(create, 0);
  dev.execute(open_app("Clock"));
  CHECK_FALSE(dev.on_path());
  CHECK_THROWS_AS(dev.oracle_action(), ExecutionError);
  // Recovering to the path makes the oracle usable again.
  dev.execute(make_default_action(ActionType::NavigateHome));
  CHECK(dev.on_path());
  CHECK(dev.oracle_action().type == ActionType::OpenApp);
}

TEST_CASE("execute: stack semantics, text entry and clearing") {
  const auto tasks = catalog(bundled_world(), 4, {{"expenses", 3}});
  SimDevice dev(bundled_world());
  dev.reset(tasks[0], 1);
  const UiState home = dev.state();

  CHECK(dev.execute(open_app("Expenses")) == EffectKind::LaunchedFromHome);
  const UiState list = dev.state();
  CHECK(dev.execute(action_on(list, ActionType::Click, "Add expense")) == EffectKind::PushedScreen);
  CHECK(dev.state().screen_id == "new");
  CHECK(dev.stack_depth() == 3);
  CHECK(dev.execute(make_default_action(ActionType::NavigateBack)) == EffectKind::PoppedScreen);
  CHECK(dev.state() == list);

  dev.execute(action_on(list, ActionType::Click, "Add expense"));
  Action type = action_on(dev.state(), ActionType::TypeText, "Amount");
  type.content = "307.01";
  CHECK(dev.execute(type) == EffectKind::FilledEmpty);
  CHECK(find_by_label(dev.state(), "Amount")->text == "307.01");
  CHECK(dev.execute(type) == EffectKind::EditedText);
  CHECK(find_by_label(dev.state(), "Amount")->text == "307.01307.01");
  CHECK(dev.execute(action_on(dev.state(), ActionType::ClearText, "Amount")) == EffectKind::EditedText);
  CHECK(find_by_label(dev.state(), "Amount")->text.empty());
  // An empty field offers nothing to clear.
  const auto* amount = find_by_label(dev.state(), "Amount");
  for (const auto& a : extract(dev.state()).actions) CHECK_FALSE((a.type == ActionType::ClearText && a.target == amount->id));

  // Category checkboxes are mutually exclusive.
  dev.execute(action_on(dev.state(), ActionType::Click, "Health Care"));
  CHECK(find_by_label(dev.state(), "Health Care")->flags.checked);
  dev.execute(action_on(dev.state(), ActionType::Click, "Food"));
  CHECK(find_by_label(dev.state(), "Food")->flags.checked);
  CHECK_FALSE(find_by_label(dev.state(), "Health Care")->flags.checked);

  // Toolbar-like elements without transitions are no-ops.
  const UiState before = dev.state();
  CHECK(dev.execute(action_on(before, ActionType::Click, "Date")) == EffectKind::NoOp);
  CHECK(dev.state() == before);
  CHECK(dev.execute(make_default_action(ActionType::Wait)) == EffectKind::NoOp);

  CHECK(dev.execute(make_default_action(ActionType::NavigateHome)) == EffectKind::WentHome);
  CHECK(dev.stack_depth() == 1);
  CHECK(dev.state() == home);
  CHECK(dev.execute(make_default_action(ActionType::NavigateBack)) == EffectKind::NoOp);
  CHECK(dev.stack_depth() == 1);

  // Switching apps replaces the task stack.
  dev.execute(open_app("Expenses"));
  dev.execute(action_on(dev.state(), ActionType::Click, "Add expense"));
  CHECK(dev.execute(open_app("clock")) == EffectKind::Launched);
  CHECK(dev.stack_depth() == 2);
  CHECK(dev.execute(open_app("Camera")) == EffectKind::NoOp);
}

TEST_CASE("execute: invalid targets and missing content are errors") {
  const auto tasks = catalog(bundled_world(), 4, {{"notes", 1}});
  SimDevice dev(bundled_world());
  dev.reset(tasks[0], 1);
  Action bad;
  bad.type = ActionType::Click;
  bad.target = 123;
  bad.descriptor = "click \"ghost\" (button 1)";
  CHECK_THROWS_AS(dev.execute(bad), ExecutionError);
  CHECK_THROWS_AS(dev.execute(make_default_action(ActionType::OpenApp)), ExecutionError);
  CHECK_THROWS_AS(dev.execute(make_default_action(ActionType::Answer)), ExecutionError);

  dev.execute(open_app("Notes"));
  const UiElement* sort = find_by_label(dev.state(), "Sort");
  REQUIRE(sort != nullptr);
  Action lp = make_ui_action(ActionType::LongPress, *sort, 1);
  CHECK_THROWS_AS(dev.execute(lp), ExecutionError);  // not long-clickable
  Action tt = action_on(dev.state(), ActionType::TypeText, "Search notes");
  tt.content.reset();
  CHECK_THROWS_AS(dev.execute(tt), ExecutionError);
}

TEST_CASE("execute: lists scroll one row at a time and hide off-page rows") {
  const auto tasks = catalog(bundled_world(), 4, {{"notes", 1}});
  SimDevice dev(bundled_world());
  std::uint64_t seed = 0;
  for (;; ++seed) {
    dev.reset(tasks[0], seed);
    if (dev.store("notes")["notes"].size() > 9) break;
  }
  dev.execute(open_app("Notes"));
  const auto& notes = dev.store("notes")["notes"];
  const std::string first = notes[0]["title"].get<std::string>();
  const std::string ninth = notes[8]["title"].get<std::string>();
  CHECK(find_by_label(dev.state(), first) != nullptr);
  CHECK(find_by_label(dev.state(), ninth) == nullptr);
  Action down;
  for (const auto& a : extract(dev.state()).actions) {
    if (a.type == ActionType::Scroll && a.direction == ScrollDirection::Down) down = a;
  }
  REQUIRE(down.type == ActionType::Scroll);
  CHECK(dev.execute(down) == EffectKind::Scrolled);
  CHECK(find_by_label(dev.state(), first) == nullptr);
  CHECK(find_by_label(dev.state(), ninth) != nullptr);
  for (int i = 0; i < 20; ++i) dev.execute(down);
  CHECK(dev.execute(down) == EffectKind::NoOp);
}

TEST_CASE("answers: completion only when visible, success compares case-insensitively") {
  const auto tasks = catalog(bundled_world(), 9, {{"contacts", 4}});
  const TaskSpec& q = tasks[3];
  REQUIRE(q.template_id == "phone");
  SimDevice dev(bundled_world());
  dev.reset(q, 0);
  const Action answer = make_default_action(ActionType::Answer);
  CHECK_THROWS_AS(dev.complete(answer), CompletionError);
  while (dev.oracle_action().type != ActionType::Answer) dev.execute(dev.oracle_action());
  CHECK(dev.complete(answer) == q.params.at("phone"));
  Action given = answer;
  given.content = " " + q.params.at("phone") + " ";
  CHECK(dev.execute(given) == EffectKind::Terminal);
  CHECK(dev.success());
}

TEST_CASE("reversibility: 500 reversible branches restore the prior state") {
  const auto tasks = full_catalog(21, 6);
  SimDevice dev(bundled_world());
  std::mt19937_64 rng(99);
  int checked = 0;
  int attempts = 0;
  while (checked < 500 && attempts < 50000) {
    ++attempts;
    const TaskSpec& t = tasks[rng() % tasks.size()];
    dev.reset(t, rng() % 4);
    // Walk a random prefix of the oracle path.
    const auto prefix = rng() % dev.oracle_path().size();
    for (std::size_t i = 0; i < prefix; ++i) dev.execute(dev.oracle_action());
    const auto space = extract(dev.state());
    Action a = vagent::testing::with_random_content(space.actions[rng() % space.size()], rng, bundled_world());
    const UiState before = dev.state();
    SimDevice branch = dev;
    const EffectKind kind = branch.execute(a);
    if (!reversible(a.type, kind)) continue;
    branch.execute(vagent::testing::reverse_of(a));
    CHECK_MESSAGE(branch.state() == before, t.id << " " << a.rendered());
    CHECK(branch.snapshot_key() == dev.snapshot_key());
    ++checked;
  }
  CHECK(checked == 500);
}

TEST_CASE("fuzz: 1000 random action sequences keep device invariants") {
  const auto tasks = full_catalog(5, 4);
  SimDevice dev(bundled_world());
  std::mt19937_64 rng(2024);
  std::size_t max_depth = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    dev.reset(tasks[static_cast<std::size_t>(seq) % tasks.size()], static_cast<std::uint64_t>(seq));
    for (int step = 0; step < 25; ++step) {
      const auto space = extract(dev.state(), step);
      REQUIRE(validate(space, dev.state()).empty());
      Action a = vagent::testing::with_random_content(space.actions[rng() % space.size()], rng, bundled_world());
      if (is_terminal(a.type)) continue;
      const std::size_t depth = dev.stack_depth();
      const EffectKind kind = dev.execute(a);
      REQUIRE(dev.stack_depth() >= 1);
      CHECK(dev.stack().front().app == 0);
      if (a.type == ActionType::NavigateBack) CHECK(dev.stack_depth() == std::max<std::size_t>(1, depth - 1));
      if (a.type == ActionType::NavigateHome) CHECK(dev.stack_depth() == 1);
      if (kind == EffectKind::NoOp && a.type != ActionType::Wait) CHECK(dev.stack_depth() == depth);
      UiState copy = dev.state();
      REQUIRE_NOTHROW(validate_ui(copy));
      max_depth = std::max(max_depth, dev.stack_depth());
    }
  }
  CHECK(max_depth <= 6);
}

TEST_CASE("catalog: mean UI-dependent actions per oracle step is near twenty") {
  SimDevice dev(bundled_world());
  double total = 0;
  int steps = 0;
  for (const auto& t : full_catalog(31, 20)) {
    dev.reset(t, 0);
    while (!dev.success()) {
      total += static_cast<double>(extract(dev.state()).ui_dependent_count());
      ++steps;
      dev.execute(dev.oracle_action());
    }
  }
  const double mean = total / steps;
  MESSAGE("mean UI-dependent actions per step: " << mean);
  CHECK(mean >= 15.0);
  CHECK(mean <= 25.0);
}
