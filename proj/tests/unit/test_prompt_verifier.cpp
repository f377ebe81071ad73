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

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "doctest.h"
#include "support/random_ui.hpp"
#include "vagent/error.hpp"
#include "vagent/memory.hpp"
#include "vagent/prompt.hpp"
#include "vagent/scorer.hpp"
#include "vagent/tokenizer.hpp"
#include "vagent/verifier.hpp"

using namespace vagent;

namespace {

UiState save_screen() {
  return parse_ui(R"({"app_id": "notes", "screen_id": "edit", "screen_dims": [1080, 2400],
    "root": {"id": 0, "role": "container", "bounds": [0, 0, 1080, 2400], "children": [
      {"id": 1, "role": "button", "text": "Save", "bounds": [0, 0, 100, 100], "flags": {"clickable": true}},
      {"id": 2, "role": "textbox", "content_desc": "Title", "bounds": [0, 100, 100, 200],
       "flags": {"editable": true}}]}})");
}

std::vector<VerificationPrompt> prompts_for(const UiState& s, const std::string& goal = "Save the note") {
  WorkingMemory mem;
  mem.entries = {"Opened the Notes app."};
  return build_prompts(s, goal, mem, extract(s));
}

class ConstScorer final : public ScorerBackend {
 public:
  explicit ConstScorer(std::vector<double> v, std::string name = "const") : v_(std::move(v)), name_(std::move(name)) {}
  std::vector<double> score_batch(std::span<const VerificationPrompt>) const override { return v_; }
  std::string descriptor() const override { return name_; }

 private:
  std::vector<double> v_;
  std::string name_;
};

class ThrowingScorer final : public ScorerBackend {
 public:
  std::vector<double> score_batch(std::span<const VerificationPrompt>) const override {
    throw std::runtime_error("connection refused");
  }
  std::string descriptor() const override { return "http:dead"; }
};

ActionSpace random_space(std::mt19937_64& rng, int n_ui) {
  ActionSpace s;
  UiElement e;
  e.role = Role::Button;
  const ActionType ui_types[] = {ActionType::Click, ActionType::LongPress, ActionType::TypeText,
                                 ActionType::ClearText};
  for (int i = 0; i < n_ui; ++i) {
    e.id = i + 1;
    e.text = "e" + std::to_string(i);
    const auto t = ui_types[std::uniform_int_distribution<int>(0, 3)(rng)];
    s.actions.push_back(make_ui_action(t, e, i));
  }
  for (auto t : kDefaultActions) s.actions.push_back(make_default_action(t));
  return s;
}

}  // namespace

TEST_CASE("prompts share a byte-identical prefix") {
  const UiState s = save_screen();
  const auto prompts = prompts_for(s);
  REQUIRE(prompts.size() == extract(s).size());
  for (const auto& p : prompts) {
    CHECK(*p.shared_prefix == *prompts.front().shared_prefix);
    CHECK(p.question.find(p.action.descriptor) != std::string::npos);
  }
  CHECK(prompts[0].question.find("click \"Save\" (button 1)") != std::string::npos);
  CHECK(prompts[0].shared_prefix->find("Respond strictly with 'Yes' or 'No'") != std::string::npos);
  CHECK(prompts[0].shared_prefix->find("Save the note") != std::string::npos);
  CHECK(prompts[0].shared_prefix->back() == '\n');
}

TEST_CASE("prefix token count equals a lone render") {
  const UiState s = save_screen();
  const auto prompts = prompts_for(s);
  PromptContext ctx;
  ctx.goal = "Save the note";
  ctx.memory = {"Opened the Notes app."};
  ctx.state = s;
  ctx.ui = streamline(s);
  const std::string lone = render_prefix(PromptTemplate::standard(), ctx);
  CHECK(count_tokens(lone) == count_tokens(*prompts[0].shared_prefix));
  CHECK(count_tokens(prompts[0].text()) ==
        count_tokens(*prompts[0].shared_prefix) + count_tokens(prompts[0].question));
}

TEST_CASE("placeholders in values are not re-substituted") {
  const UiState s = save_screen();
  const auto prompts = prompts_for(s, "type {ui} literally");
  CHECK(prompts[0].shared_prefix->find("type {ui} literally") != std::string::npos);
}

TEST_CASE("template file round trip") {
  const auto t = PromptTemplate::load(std::string(VAGENT_DATA_DIR) + "/prompt_template.txt");
  const auto std_t = PromptTemplate::standard();
  CHECK(t.prefix == std_t.prefix);
  CHECK(t.question == std_t.question);
  CHECK_THROWS(PromptTemplate::parse("not a template"));
}

TEST_CASE("tokenizer splits punctuation") {
  const auto toks = tokenize("click \"Save\" (button 1)");
  const std::vector<std::string_view> want = {"click", "\"", "Save", "\"", "(", "button", "1", ")"};
  CHECK(toks == want);
}

TEST_CASE("zero-parameter scorer gives uniform scores") {
  const auto prompts = prompts_for(save_screen());
  FeatureScorer scorer;
  const ScoreVector sv = score_actions(scorer, prompts);
  for (double x : sv.scores) CHECK(x == 0.0);
  for (double p : sv.normalized) CHECK(p == doctest::Approx(1.0 / static_cast<double>(prompts.size())));
  CHECK(select(sv) == 0);
}

TEST_CASE("permuting prompts permutes scores") {
  testing::RandomUi gen(31);
  const FeatureScorer scorer = FeatureScorer::randomized(5);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const UiState s = gen.next();
    auto prompts = prompts_for(s);
    const auto base = score_actions(scorer, prompts).scores;
    std::vector<std::size_t> perm(prompts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<VerificationPrompt> shuffled;
    for (auto i : perm) shuffled.push_back(prompts[i]);
    const auto got = score_actions(scorer, shuffled).scores;
    for (std::size_t k = 0; k < perm.size(); ++k) CHECK(got[k] == base[perm[k]]);
  }
}

TEST_CASE("scoring errors") {
  const auto prompts = prompts_for(save_screen());
  ConstScorer short_by_one(std::vector<double>(prompts.size() - 1, 0.0), "http:short");
  try {
    score_actions(short_by_one, prompts);
    FAIL("expected ScoringError");
  } catch (const ScoringError& e) {
    CHECK(e.backend() == "http:short");
  }
  std::vector<double> nan_scores(prompts.size(), 0.0);
  nan_scores[1] = std::nan("");
  ConstScorer bad(nan_scores);
  CHECK_THROWS_AS(score_actions(bad, prompts), ValidationError);
  ThrowingScorer dead;
  CHECK_THROWS_AS(score_actions(dead, prompts), ScoringError);
  CHECK_THROWS_AS(score_actions(dead, std::span<const VerificationPrompt>{}), ValidationError);
}

TEST_CASE("select argmax, ties low, shift invariant") {
  ScoreVector a{{0.1, 0.9, 0.3}, {}, ""};
  CHECK(select(a) == 1);
  ScoreVector b{{0.5, 0.5}, {}, ""};
  CHECK(select(b) == 0);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    ScoreVector v;
    for (int k = 0; k < 20; ++k) v.scores.push_back(n(rng));
    const int base = select(v);
    for (auto& x : v.scores) x += 3.25;
    CHECK(select(v) == base);
  }
}

TEST_CASE("normalized sums to one and is shift invariant") {
  const auto prompts = prompts_for(save_screen());
  std::vector<double> s(prompts.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i) * 0.7 - 2.0;
  ConstScorer c1(s);
  auto shifted = s;
  for (auto& x : shifted) x += 11.0;
  ConstScorer c2(shifted);
  const auto v1 = score_actions(c1, prompts);
  const auto v2 = score_actions(c2, prompts);
  CHECK(std::abs(std::accumulate(v1.normalized.begin(), v1.normalized.end(), 0.0) - 1.0) < 1e-9);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(v1.normalized[i] - v2.normalized[i]) < 1e-12);
}

TEST_CASE("schedule of a defaults-only space") {
  UiState empty;
  empty.root.bounds = {0, 0, 1080, 2400};
  const auto space = extract(empty);
  const auto prompts = build_prompts(empty, "g", WorkingMemory{}, space);
  const BatchSchedule s = schedule(prompts, space);
  CHECK(space.actions[static_cast<std::size_t>(s.warmup)].type == ActionType::OpenApp);
  CHECK(s.groups.size() == 5);
  for (const auto& g : s.groups) CHECK(g.prompts.size() == 1);
}

TEST_CASE("schedule groups by type in first-occurrence order") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_ui = std::uniform_int_distribution<int>(0, 40)(rng);
    const ActionSpace space = random_space(rng, n_ui);
    UiState st;
    st.root.bounds = {0, 0, 1080, 2400};
    const auto prompts = build_prompts(st, "g", WorkingMemory{}, space);
    const BatchSchedule s = schedule(prompts, space);
    CHECK(s.warmup == 0);
    // Oracle: count types after the warm-up and their first appearance.
    std::map<ActionType, std::size_t> counts;
    std::vector<ActionType> first_seen;
    for (std::size_t i = 1; i < space.size(); ++i) {
      if (counts[space.actions[i].type]++ == 0) first_seen.push_back(space.actions[i].type);
    }
    REQUIRE(s.groups.size() == first_seen.size());
    for (std::size_t g = 0; g < first_seen.size(); ++g) {
      CHECK(s.groups[g].type == first_seen[g]);
      CHECK(s.groups[g].prompts.size() == counts[first_seen[g]]);
    }
    auto order = s.order();
    std::sort(order.begin(), order.end());
    std::vector<int> all(space.size());
    std::iota(all.begin(), all.end(), 0);
    CHECK(order == all);
  }
}

TEST_CASE("ten clicks and four inputs") {
  ActionSpace space;
  UiElement e;
  e.role = Role::Button;
  for (int i = 0; i < 10; ++i) {
    e.id = i + 1;
    space.actions.push_back(make_ui_action(ActionType::Click, e, i));
  }
  e.role = Role::Textbox;
  for (int i = 0; i < 4; ++i) {
    e.id = 20 + i;
    space.actions.push_back(make_ui_action(ActionType::TypeText, e, 10 + i));
  }
  for (auto t : kDefaultActions) space.actions.push_back(make_default_action(t));
  UiState st;
  const auto prompts = build_prompts(st, "g", WorkingMemory{}, space);
  const auto s = schedule(prompts, space);
  REQUIRE(s.groups.size() >= 2);
  CHECK(s.groups[0].type == ActionType::Click);
  CHECK(s.groups[0].prompts.size() == 9);
  CHECK(s.groups[1].type == ActionType::TypeText);
  CHECK(s.groups[1].prompts.size() == 4);
}

TEST_CASE("cost model basics") {
  const auto prompts = prompts_for(save_screen());
  const std::span<const VerificationPrompt> one(prompts.data(), 1);
  const CostReport single = simulate_cost(BatchSchedule{}, one);
  CHECK(single.fresh_tokens == single.total_tokens);
  CHECK(single.cached_tokens == 0);

  const std::span<const VerificationPrompt> two(prompts.data(), 2);
  const CostReport pair = simulate_cost(sequential_schedule(2), two);
  const auto q1 = static_cast<std::int64_t>(count_tokens(prompts[1].question));
  const auto q0 = static_cast<std::int64_t>(count_tokens(prompts[0].question));
  const auto full0 = static_cast<std::int64_t>(count_tokens(prompts[0].text()));
  // The second question shares its leading "[QUESTION] Is the action" tokens.
  CHECK(pair.fresh_tokens <= full0 + q1);
  CHECK(pair.fresh_tokens > full0);
  CHECK(pair.total_tokens == pair.cached_tokens + pair.fresh_tokens);
  CHECK(pair.cached_tokens >= full0 - q0);
  CHECK(pair.est_latency_s == doctest::Approx(static_cast<double>(pair.fresh_tokens) / 450.0));
}

TEST_CASE("scheduled scoring equals direct scoring") {
  testing::RandomUi gen(77);
  const FeatureScorer scorer = FeatureScorer::randomized(9);
  for (int i = 0; i < 50; ++i) {
    const UiState s = gen.next();
    const auto space = extract(s);
    const auto prompts = prompts_for(s);
    const auto direct = score_actions(scorer, prompts);
    const auto sched = score_scheduled(scorer, prompts, schedule(prompts, space));
    CHECK(direct.scores == sched.scores);
    CHECK(select(direct) == select(sched));
    const auto grouped = simulate_cost(schedule(prompts, space), prompts);
    const auto plain = uncached_cost(prompts);
    CHECK(grouped.fresh_tokens <= plain.fresh_tokens);
    CHECK(grouped.total_tokens == plain.total_tokens);
  }
}

TEST_CASE("model save and load") {
  const auto prompts = prompts_for(save_screen());
  SUBCASE("linear") {
    const FeatureScorer a = FeatureScorer::randomized(3, 0.5, {.features = {.dim = 4096}});
    const FeatureScorer b = FeatureScorer::from_json(nlohmann::json::parse(a.to_json().dump()));
    CHECK(a.score_batch(prompts) == b.score_batch(prompts));
  }
  SUBCASE("mlp") {
    FeatureScorerConfig cfg;
    cfg.features.dim = 2048;
    cfg.head = HeadType::Mlp;
    cfg.hidden = 8;
    cfg.seed = 4;
    FeatureScorer a(cfg);
    Gradient g;
    a.accumulate(a.featurizer()(prompts[0]), 1.0, g);
    a.apply(g, 0.3);
    const FeatureScorer b = FeatureScorer::from_json(nlohmann::json::parse(a.to_json().dump()));
    CHECK(a.score_batch(prompts) == b.score_batch(prompts));
  }
  CHECK_THROWS_AS(FeatureScorer::from_json(nlohmann::json{{"schema", "other"}}), DataError);
}

TEST_CASE("rule-based memory sentence") {
  UiState before = save_screen();
  UiState after = before;
  UiElement ok;
  ok.id = 9;
  ok.role = Role::Textbox;
  ok.content_desc = "OK";
  ok.bounds = {0, 300, 100, 400};
  after.root.children.push_back(ok);
  const auto space = extract(before);
  const Action click_save = space.actions[0];
  const std::string s = rule_based_summary(click_save, before, diff_ui(before, after));
  CHECK(s == "Clicked the 'Save' button. Now an 'OK' text box appears.");
  CHECK(rule_based_summary(click_save, before, UiDelta{}) ==
        "Clicked the 'Save' button. There is no visible change.");

  WorkingMemory hist{MemoryMode::ActionHistory, {}};
  Action typed = space.actions[1];
  typed.content = "Groceries";
  update_memory(hist, typed, before, after, diff_ui(before, after));
  REQUIRE(hist.entries.size() == 1);
  CHECK(hist.entries[0] == "input \"Groceries\" to \"Title\" (textbox 2)");

  WorkingMemory ext{MemoryMode::External, {}};
  CHECK_FALSE(update_memory(ext, click_save, before, after, diff_ui(before, after)));
  CHECK(ext.entries.size() == 1);
}

TEST_CASE("wide screen probe") {
  for (int n : {6, 7, 50}) {
    const UiState s = wide_screen(n);
    CHECK(extract(s).size() == static_cast<std::size_t>(n));
    CHECK(parse_ui(serialize_ui(s)) == s);
  }
  CHECK_THROWS_AS(wide_screen(5), ValidationError);

  const UiState s = wide_screen(50);
  const auto prompts = prompts_for(s, "Open \"Entry 17\"");
  const auto plain = uncached_cost(prompts);
  const auto grouped = simulate_cost(schedule(prompts, extract(s)), prompts);
  CHECK(plain.fresh_tokens >= 5 * grouped.fresh_tokens);
}
