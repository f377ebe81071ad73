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

#ifndef VAGENT_UI_MODEL_HPP_
#define VAGENT_UI_MODEL_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace vagent {

enum class Role { Button, Checkbox, Textbox, ListItem, Label, Container };
enum class ScrollAxis { Vertical, Horizontal };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view name);

struct Bounds {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  bool operator==(const Bounds&) const = default;
  bool contains(const Bounds& other) const {
    return left <= other.left && top <= other.top && right >= other.right &&
           bottom >= other.bottom;
  }
};

struct ElementFlags {
  bool clickable = false;
  bool long_clickable = false;
  bool scrollable = false;
  bool editable = false;
  bool checked = false;
  bool visible = true;

  bool operator==(const ElementFlags&) const = default;
  bool interactive() const {
    return clickable || long_clickable || scrollable || editable;
  }
};

struct UiElement {
  int id = 0;
  Role role = Role::Container;
  std::string text;
  std::string content_desc;
  Bounds bounds;
  ElementFlags flags;
  // Only meaningful when flags.scrollable is set.
  ScrollAxis scroll_axis = ScrollAxis::Vertical;
  std::vector<UiElement> children;

  bool operator==(const UiElement&) const = default;

  // Display label: text when present, otherwise the accessibility string.
  const std::string& label() const {
    return text.empty() ? content_desc : text;
  }
};

struct UiState {
  std::string app_id;
  std::string screen_id;
  int width = 1080;
  int height = 2400;
  UiElement root;

  bool operator==(const UiState&) const = default;
};

struct ElementSummary {
  int id = 0;
  Role role = Role::Container;
  std::string text;
  std::string content_desc;

  bool operator==(const ElementSummary&) const = default;
  const std::string& label() const {
    return text.empty() ? content_desc : text;
  }
};

struct TextChange {
  int id = 0;
  std::string before;
  std::string after;

  bool operator==(const TextChange&) const = default;
};

struct UiDelta {
  std::vector<ElementSummary> appeared;
  std::vector<ElementSummary> disappeared;
  std::vector<TextChange> changed_text;

  bool empty() const {
    return appeared.empty() && disappeared.empty() && changed_text.empty();
  }
  bool operator==(const UiDelta&) const = default;
};

// Element plus whether it and every ancestor is visible.
struct FlatElement {
  const UiElement* element = nullptr;
  bool visible = true;
  int depth = 0;
};

// Preorder walk of the tree.
std::vector<FlatElement> flatten(const UiState& state);

// Effectively visible elements in document order. Index in this list is the
// element's streamline index.
std::vector<const UiElement*> visible_elements(const UiState& state);

const UiElement* find_element(const UiState& state, int id);

// id -> streamline index, visible elements only.
std::unordered_map<int, int> streamline_indices(const UiState& state);

// Throws ParseError on malformed JSON and ValidationError on invariant
// violations (duplicate ids, bad bounds, editable non-textbox).
UiState parse_ui(std::string_view text);

// Simplified accessibility-dump XML:
//   <hierarchy app=".." screen=".." width=".." height="..">
//     <node id="0" class="button" text=".." content-desc=".."
//           bounds="[l,t][r,b]" clickable="true" ...> ... </node>
//   </hierarchy>
UiState parse_ui_xml(std::string_view text);

nlohmann::json ui_to_json(const UiState& state);
UiState ui_from_json(const nlohmann::json& doc);
std::string serialize_ui(const UiState& state);

// Checks the invariants and clamps child bounds into their parent. Throws
// ValidationError.
void validate_ui(UiState& state);

// Compact per-element description used inside verification prompts.
std::string streamline(const UiState& state);

UiDelta diff_ui(const UiState& before, const UiState& after);

nlohmann::json delta_to_json(const UiDelta& delta);

}  // namespace vagent

#endif  // VAGENT_UI_MODEL_HPP_
