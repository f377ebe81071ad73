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

#include "vagent/ui_model.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "vagent/error.hpp"

namespace vagent {
namespace {

constexpr std::array<std::pair<Role, std::string_view>, 6> kRoleNames{{
    {Role::Button, "button"},
    {Role::Checkbox, "checkbox"},
    {Role::Textbox, "textbox"},
    {Role::ListItem, "list-item"},
    {Role::Label, "label"},
    {Role::Container, "container"},
}};

std::pair<int, int> line_column(std::string_view text, std::size_t offset) {
  int line = 1;
  int column = 1;
  offset = std::min(offset, text.size());
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

nlohmann::json element_to_json(const UiElement& e) {
  nlohmann::json j;
  j["id"] = e.id;
  j["role"] = std::string(to_string(e.role));
  j["text"] = e.text;
  j["content_desc"] = e.content_desc;
  j["bounds"] = {e.bounds.left, e.bounds.top, e.bounds.right, e.bounds.bottom};
  j["flags"] = {{"clickable", e.flags.clickable},
                {"long_clickable", e.flags.long_clickable},
                {"scrollable", e.flags.scrollable},
                {"editable", e.flags.editable},
                {"checked", e.flags.checked},
                {"visible", e.flags.visible}};
  if (e.flags.scrollable && e.scroll_axis == ScrollAxis::Horizontal) {
    j["scroll_axis"] = "horizontal";
  }
  j["children"] = nlohmann::json::array();
  for (const auto& child : e.children) j["children"].push_back(element_to_json(child));
  return j;
}

UiElement element_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("element must be an object");
  UiElement e;
  e.id = j.at("id").get<int>();
  const auto role_name = j.at("role").get<std::string>();
  const auto role = role_from_string(role_name);
  if (!role) throw ValidationError("unknown role '" + role_name + "'");
  e.role = *role;
  e.text = j.value("text", "");
  e.content_desc = j.value("content_desc", "");
  const auto& b = j.at("bounds");
  if (!b.is_array() || b.size() != 4) throw ValidationError("bounds must be [l,t,r,b]");
  e.bounds = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
  if (j.contains("flags")) {
    const auto& f = j["flags"];
    e.flags.clickable = f.value("clickable", false);
    e.flags.long_clickable = f.value("long_clickable", false);
    e.flags.scrollable = f.value("scrollable", false);
    e.flags.editable = f.value("editable", false);
    e.flags.checked = f.value("checked", false);
    e.flags.visible = f.value("visible", true);
  }
  if (j.value("scroll_axis", "vertical") == "horizontal") {
    e.scroll_axis = ScrollAxis::Horizontal;
  }
  if (j.contains("children")) {
    for (const auto& child : j["children"]) e.children.push_back(element_from_json(child));
  }
  return e;
}

void validate_element(UiElement& e, const UiElement* parent, const UiState& state,
                      std::set<int>& ids) {
  if (!ids.insert(e.id).second) {
    throw ValidationError("duplicate element id " + std::to_string(e.id));
  }
  const auto& b = e.bounds;
  if (b.left < 0 || b.top < 0 || b.left > b.right || b.top > b.bottom ||
      b.right > state.width || b.bottom > state.height) {
    throw ValidationError("element " + std::to_string(e.id) + " has invalid bounds");
  }
  if (e.flags.editable && e.role != Role::Textbox) {
    throw ValidationError("element " + std::to_string(e.id) +
                          " is editable but not a textbox");
  }
  if (parent != nullptr) {
    const auto& p = parent->bounds;
    e.bounds.left = std::clamp(e.bounds.left, p.left, p.right);
    e.bounds.right = std::clamp(e.bounds.right, p.left, p.right);
    e.bounds.top = std::clamp(e.bounds.top, p.top, p.bottom);
    e.bounds.bottom = std::clamp(e.bounds.bottom, p.top, p.bottom);
  }
  for (auto& child : e.children) validate_element(child, &e, state, ids);
}

void flatten_into(const UiElement& e, bool parent_visible, int depth,
                  std::vector<FlatElement>& out) {
  const bool visible = parent_visible && e.flags.visible;
  out.push_back({&e, visible, depth});
  for (const auto& child : e.children) flatten_into(child, visible, depth + 1, out);
}

void escape_into(std::string& out, const std::string& s) {
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
}

ElementSummary summarize(const UiElement& e) {
  return {e.id, e.role, e.text, e.content_desc};
}

}  // namespace

std::string_view to_string(Role role) {
  for (const auto& [r, name] : kRoleNames) {
    if (r == role) return name;
  }
  return "container";
}

std::optional<Role> role_from_string(std::string_view name) {
  for (const auto& [r, n] : kRoleNames) {
    if (n == name) return r;
  }
  return std::nullopt;
}

std::vector<FlatElement> flatten(const UiState& state) {
  std::vector<FlatElement> out;
  flatten_into(state.root, true, 0, out);
  return out;
}

std::vector<const UiElement*> visible_elements(const UiState& state) {
  std::vector<const UiElement*> out;
  for (const auto& f : flatten(state)) {
    if (f.visible) out.push_back(f.element);
  }
  return out;
}

const UiElement* find_element(const UiState& state, int id) {
  for (const auto& f : flatten(state)) {
    if (f.element->id == id) return f.element;
  }
  return nullptr;
}

std::unordered_map<int, int> streamline_indices(const UiState& state) {
  std::unordered_map<int, int> out;
  int index = 0;
  for (const auto* e : visible_elements(state)) out.emplace(e->id, index++);
  return out;
}

void validate_ui(UiState& state) {
  if (state.width <= 0 || state.height <= 0) {
    throw ValidationError("screen dimensions must be positive");
  }
  std::set<int> ids;
  validate_element(state.root, nullptr, state, ids);
}

nlohmann::json ui_to_json(const UiState& state) {
  return {{"app_id", state.app_id},
          {"screen_id", state.screen_id},
          {"screen_dims", {state.width, state.height}},
          {"root", element_to_json(state.root)}};
}

UiState ui_from_json(const nlohmann::json& doc) {
  UiState state;
  try {
    state.app_id = doc.at("app_id").get<std::string>();
    state.screen_id = doc.at("screen_id").get<std::string>();
    const auto& dims = doc.at("screen_dims");
    if (!dims.is_array() || dims.size() != 2) {
      throw ValidationError("screen_dims must be [w,h]");
    }
    state.width = dims[0].get<int>();
    state.height = dims[1].get<int>();
    state.root = element_from_json(doc.at("root"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad UI document: ") + e.what());
  }
  validate_ui(state);
  return state;
}

UiState parse_ui(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("malformed UI document", line, column);
  }
  return ui_from_json(doc);
}

std::string serialize_ui(const UiState& state) { return ui_to_json(state).dump(); }

std::string streamline(const UiState& state) {
  std::string out = "APP " + state.app_id + " SCREEN " + state.screen_id + "\n";
  int index = 0;
  for (const auto* e : visible_elements(state)) {
    out += std::to_string(index++);
    out += ". ";
    out += to_string(e->role);
    out += " \"";
    escape_into(out, e->label());
    out += "\" [";
    if (e->flags.clickable) out += 'c';
    if (e->flags.long_clickable) out += 'l';
    if (e->flags.scrollable) out += e->scroll_axis == ScrollAxis::Horizontal ? 'h' : 's';
    if (e->flags.editable) out += 'e';
    if (e->flags.checked) out += 'x';
    out += "]\n";
  }
  return out;
}

UiDelta diff_ui(const UiState& before, const UiState& after) {
  const auto b_elems = visible_elements(before);
  const auto a_elems = visible_elements(after);

  // Stable key: (role, content_desc) when the description is non-empty and
  // unique within its tree.
  using Key = std::pair<Role, std::string>;
  auto keyed = [](const std::vector<const UiElement*>& elems) {
    std::map<Key, int> counts;
    for (const auto* e : elems) {
      if (!e->content_desc.empty()) ++counts[{e->role, e->content_desc}];
    }
    std::map<Key, const UiElement*> out;
    for (const auto* e : elems) {
      if (e->content_desc.empty()) continue;
      Key k{e->role, e->content_desc};
      if (counts[k] == 1) out[k] = e;
    }
    return out;
  };
  const auto b_keyed = keyed(b_elems);
  const auto a_keyed = keyed(a_elems);

  std::set<const UiElement*> b_matched;
  std::vector<std::pair<const UiElement*, const UiElement*>> pairs;
  std::vector<const UiElement*> a_unmatched;
  for (const auto* e : a_elems) {
    const UiElement* match = nullptr;
    if (!e->content_desc.empty()) {
      Key k{e->role, e->content_desc};
      auto ai = a_keyed.find(k);
      auto bi = b_keyed.find(k);
      if (ai != a_keyed.end() && bi != b_keyed.end()) match = bi->second;
    }
    if (match == nullptr) {
      for (const auto* b : b_elems) {
        if (b->id == e->id && !b_matched.count(b)) {
          // Keyed elements only pair with their key partner.
          const bool b_is_keyed =
              !b->content_desc.empty() && b_keyed.count({b->role, b->content_desc}) &&
              a_keyed.count({b->role, b->content_desc});
          if (!b_is_keyed) match = b;
          break;
        }
      }
    }
    if (match != nullptr && !b_matched.count(match)) {
      b_matched.insert(match);
      pairs.emplace_back(match, e);
    } else {
      a_unmatched.push_back(e);
    }
  }

  UiDelta delta;
  for (const auto* e : a_unmatched) delta.appeared.push_back(summarize(*e));
  for (const auto* b : b_elems) {
    if (!b_matched.count(b)) delta.disappeared.push_back(summarize(*b));
  }
  for (const auto& [b, a] : pairs) {
    if (b->text != a->text) delta.changed_text.push_back({a->id, b->text, a->text});
  }
  return delta;
}

nlohmann::json delta_to_json(const UiDelta& delta) {
  auto summaries = [](const std::vector<ElementSummary>& v) {
    auto arr = nlohmann::json::array();
    for (const auto& s : v) {
      arr.push_back({{"id", s.id},
                     {"role", std::string(to_string(s.role))},
                     {"text", s.text},
                     {"content_desc", s.content_desc}});
    }
    return arr;
  };
  auto changes = nlohmann::json::array();
  for (const auto& c : delta.changed_text) {
    changes.push_back({{"id", c.id}, {"before", c.before}, {"after", c.after}});
  }
  return {{"appeared", summaries(delta.appeared)},
          {"disappeared", summaries(delta.disappeared)},
          {"changed_text", changes}};
}

}  // namespace vagent
