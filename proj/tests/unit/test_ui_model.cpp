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
#include <functional>
#include <set>

#include "doctest.h"
#include "support/random_ui.hpp"
#include "vagent/error.hpp"
#include "vagent/ui_model.hpp"

using namespace vagent;

namespace {

const char* kOneButton = R"({
  "app_id": "notes", "screen_id": "list", "screen_dims": [1080, 2400],
  "root": {"id": 0, "role": "container", "bounds": [0, 0, 1080, 2400], "children": [
    {"id": 1, "role": "button", "text": "Save", "bounds": [10, 10, 200, 100],
     "flags": {"clickable": true}}
  ]}
})";

// Independent count: walk the tree carrying ancestor visibility.
int count_visible(const UiElement& e, bool parent_visible) {
  const bool vis = parent_visible && e.flags.visible;
  int n = vis ? 1 : 0;
  for (const auto& c : e.children) n += count_visible(c, vis);
  return n;
}

UiElement leaf(int id, Role role, std::string text, std::string desc) {
  UiElement e;
  e.id = id;
  e.role = role;
  e.text = std::move(text);
  e.content_desc = std::move(desc);
  e.bounds = {0, 0, 100, 100};
  return e;
}

}  // namespace

TEST_CASE("single clickable button parses") {
  const UiState s = parse_ui(kOneButton);
  CHECK(s.app_id == "notes");
  REQUIRE(s.root.children.size() == 1);
  CHECK(s.root.children[0].flags.clickable);
  CHECK(s.root.children[0].text == "Save");
  CHECK(visible_elements(s).size() == 2);
}

TEST_CASE("duplicate ids are rejected") {
  std::string doc = kOneButton;
  doc.replace(doc.find("\"id\": 1"), 7, "\"id\": 0");
  CHECK_THROWS_AS(parse_ui(doc), ValidationError);
}

TEST_CASE("editable non-textbox is rejected") {
  std::string doc = kOneButton;
  doc.replace(doc.find("\"clickable\": true"), 17, "\"editable\": true");
  CHECK_THROWS_AS(parse_ui(doc), ValidationError);
}

TEST_CASE("malformed document reports position") {
  const std::string doc = "{\n  \"app_id\": \"x\",\n  \"root\": {,}\n}";
  try {
    parse_ui(doc);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() > 0);
  }
}

TEST_CASE("out-of-screen bounds are rejected") {
  std::string doc = kOneButton;
  doc.replace(doc.find("[10, 10, 200, 100]"), 18, "[10, 10, 2000, 100]");
  CHECK_THROWS_AS(parse_ui(doc), ValidationError);
}

TEST_CASE("serialize/parse round trip on random trees") {
  testing::RandomUi gen(7);
  for (int i = 0; i < 200; ++i) {
    const UiState s = gen.next();
    const UiState back = parse_ui(serialize_ui(s));
    REQUIRE(back == s);
    CHECK(serialize_ui(back) == serialize_ui(s));
  }
}

TEST_CASE("xml import shim") {
  const char* xml = R"(<hierarchy app="clock" screen="alarms" width="1080" height="2400">
  <node id="0" class="android.widget.FrameLayout" bounds="[0,0][1080,2400]">
    <node id="1" class="android.widget.Button" text="Add alarm" bounds="[0,0][500,200]" clickable="true"/>
    <node id="2" class="android.widget.EditText" content-desc="Label" bounds="[0,200][500,400]" editable="true"/>
    <node id="3" class="list-item" text="7:00" bounds="[0,400][500,600]" visible-to-user="false"/>
  </node>
</hierarchy>)";
  const UiState s = parse_ui_xml(xml);
  CHECK(s.app_id == "clock");
  REQUIRE(s.root.children.size() == 3);
  CHECK(s.root.children[0].role == Role::Button);
  CHECK(s.root.children[0].flags.clickable);
  CHECK(s.root.children[1].role == Role::Textbox);
  CHECK(s.root.children[1].flags.editable);
  CHECK_FALSE(s.root.children[2].flags.visible);
  CHECK_THROWS_AS(parse_ui_xml("<hierarchy><node"), ParseError);
}

TEST_CASE("streamline format") {
  const UiState s = parse_ui(kOneButton);
  const std::string text = streamline(s);
  CHECK(text.rfind("APP notes SCREEN list\n", 0) == 0);
  CHECK(text.find("1. button \"Save\" [c]") != std::string::npos);
  CHECK(text.find("1080") == std::string::npos);
  CHECK(streamline(s) == streamline(parse_ui(kOneButton)));
}

TEST_CASE("streamline emits one line per visible element") {
  testing::RandomUi gen(11, {.max_depth = 3, .max_children = 5, .invisible = 0.2});
  int checked25 = 0;
  for (int i = 0; i < 300; ++i) {
    const UiState s = gen.next();
    const std::string text = streamline(s);
    const auto lines = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
    const int expected = count_visible(s.root, true);
    CHECK(lines == expected + 1);
    if (expected == 25) ++checked25;
  }
  CHECK(checked25 > 0);
}

TEST_CASE("streamline distinguishes interactive sets") {
  UiState a = parse_ui(kOneButton);
  UiState b = a;
  b.root.children[0].flags.long_clickable = true;
  CHECK(streamline(a) != streamline(b));
}

TEST_CASE("diff of identical states is empty") {
  testing::RandomUi gen(3);
  for (int i = 0; i < 100; ++i) {
    const UiState s = gen.next();
    CHECK(diff_ui(s, s).empty());
  }
}

TEST_CASE("new OK textbox shows up as appeared") {
  UiState before = parse_ui(kOneButton);
  UiState after = before;
  after.root.children.push_back(leaf(7, Role::Textbox, "", "OK"));
  const UiDelta d = diff_ui(before, after);
  REQUIRE(d.appeared.size() == 1);
  CHECK(d.appeared[0].label() == "OK");
  CHECK(d.appeared[0].role == Role::Textbox);
  CHECK(d.disappeared.empty());
}

TEST_CASE("diff matches a known edit script") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    UiState before;
    before.app_id = "a";
    before.screen_id = "s";
    before.root.bounds = {0, 0, 1080, 2400};
    const int n = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int i = 1; i <= n; ++i) {
      before.root.children.push_back(
          leaf(i, static_cast<Role>(i % 6), "t" + std::to_string(i), "d" + std::to_string(i)));
    }
    UiState after = before;
    std::set<int> removed, added, changed;
    auto& kids = after.root.children;
    for (auto it = kids.begin(); it != kids.end();) {
      if (std::bernoulli_distribution(0.25)(rng)) {
        removed.insert(it->id);
        it = kids.erase(it);
      } else {
        if (std::bernoulli_distribution(0.25)(rng)) {
          it->text += "!";
          changed.insert(it->id);
        }
        ++it;
      }
    }
    const int extra = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int k = 0; k < extra; ++k) {
      const int id = 100 + k;
      kids.push_back(leaf(id, Role::Label, "new", "n" + std::to_string(id)));
      added.insert(id);
    }
    const UiDelta d = diff_ui(before, after);
    std::set<int> got_added, got_removed, got_changed;
    for (const auto& e : d.appeared) got_added.insert(e.id);
    for (const auto& e : d.disappeared) got_removed.insert(e.id);
    for (const auto& c : d.changed_text) got_changed.insert(c.id);
    CHECK(got_added == added);
    CHECK(got_removed == removed);
    CHECK(got_changed == changed);
  }
}

TEST_CASE("appeared and disappeared never share an id") {
  testing::RandomUi gen(9);
  for (int i = 0; i < 300; ++i) {
    const UiState a = gen.next();
    const UiState b = gen.next();
    const UiDelta d = diff_ui(a, b);
    std::set<int> ids;
    for (const auto& e : d.appeared) ids.insert(e.id);
    for (const auto& e : d.disappeared) CHECK_FALSE(ids.count(e.id));
  }
}

TEST_CASE("children are clamped into their parent") {
  std::string doc = kOneButton;
  doc.replace(doc.find("[0, 0, 1080, 2400]"), 18, "[0, 0, 100, 50]");
  const UiState s = parse_ui(doc);
  const auto& c = s.root.children[0].bounds;
  CHECK(s.root.bounds.contains(c));
}
