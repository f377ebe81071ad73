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

#include "vagent/action_space.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <tuple>
#include <utility>

#include "vagent/error.hpp"

namespace vagent {
namespace {

constexpr std::array<std::pair<ActionType, std::string_view>, 11> kTypeNames{{
    {ActionType::Click, "click"},
    {ActionType::LongPress, "long_press"},
    {ActionType::Scroll, "scroll"},
    {ActionType::TypeText, "type_text"},
    {ActionType::ClearText, "clear_text"},
    {ActionType::OpenApp, "open_app"},
    {ActionType::Wait, "wait"},
    {ActionType::NavigateHome, "navigate_home"},
    {ActionType::NavigateBack, "navigate_back"},
    {ActionType::CompleteTask, "complete_task"},
    {ActionType::Answer, "answer"},
}};

constexpr std::array<std::pair<ScrollDirection, std::string_view>, 4> kDirNames{{
    {ScrollDirection::Up, "up"},
    {ScrollDirection::Down, "down"},
    {ScrollDirection::Left, "left"},
    {ScrollDirection::Right, "right"},
}};

std::string quoted(std::string s) {
  std::replace(s.begin(), s.end(), '"', '\'');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return "\"" + s + "\"";
}

// Text fields are named by their accessibility string; their text is the
// current content.
const std::string& target_label(const UiElement& e) {
  if (e.role == Role::Textbox && !e.content_desc.empty()) return e.content_desc;
  return e.label();
}

bool licensed(ActionType type, const UiElement& e) {
  switch (type) {
    case ActionType::Click: return e.flags.clickable;
    case ActionType::LongPress: return e.flags.long_clickable;
    case ActionType::Scroll: return e.flags.scrollable;
    case ActionType::TypeText:
    case ActionType::ClearText: return e.flags.editable;
    default: return false;
  }
}

}  // namespace

std::string_view to_string(ActionType type) {
  for (const auto& [t, name] : kTypeNames) {
    if (t == type) return name;
  }
  return "wait";
}

std::optional<ActionType> action_type_from_string(std::string_view name) {
  for (const auto& [t, n] : kTypeNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

std::string_view to_string(ScrollDirection dir) {
  for (const auto& [d, name] : kDirNames) {
    if (d == dir) return name;
  }
  return "down";
}

std::optional<ScrollDirection> scroll_direction_from_string(std::string_view name) {
  for (const auto& [d, n] : kDirNames) {
    if (n == name) return d;
  }
  return std::nullopt;
}

ScrollDirection opposite(ScrollDirection dir) {
  switch (dir) {
    case ScrollDirection::Up: return ScrollDirection::Down;
    case ScrollDirection::Down: return ScrollDirection::Up;
    case ScrollDirection::Left: return ScrollDirection::Right;
    case ScrollDirection::Right: return ScrollDirection::Left;
  }
  return ScrollDirection::Up;
}

bool is_default(ActionType type) {
  return std::find(std::begin(kDefaultActions), std::end(kDefaultActions), type) !=
         std::end(kDefaultActions);
}

bool requires_completion(ActionType type) {
  return type == ActionType::TypeText || type == ActionType::OpenApp ||
         type == ActionType::Answer;
}

bool is_terminal(ActionType type) {
  return type == ActionType::CompleteTask || type == ActionType::Answer;
}

std::string Action::rendered() const {
  if (!content) return descriptor;
  std::string out = descriptor;
  if (const auto pos = out.find(kContentSlot); pos != std::string::npos) {
    out.replace(pos, kContentSlot.size(), quoted(*content));
  }
  return out;
}

int ActionSpace::index_of(const Action& a) const {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].same_choice(a)) return static_cast<int>(i);
  }
  return -1;
}

std::size_t ActionSpace::ui_dependent_count() const {
  return static_cast<std::size_t>(std::count_if(
      actions.begin(), actions.end(), [](const Action& a) { return !is_default(a.type); }));
}

Action make_default_action(ActionType type) {
  Action a;
  a.type = type;
  switch (type) {
    case ActionType::OpenApp: a.descriptor = "open app {content}"; break;
    case ActionType::Wait: a.descriptor = "wait"; break;
    case ActionType::NavigateHome: a.descriptor = "navigate home"; break;
    case ActionType::NavigateBack: a.descriptor = "navigate back"; break;
    case ActionType::CompleteTask: a.descriptor = "complete task"; break;
    case ActionType::Answer: a.descriptor = "answer {content}"; break;
    default: throw DataError("not a default action type: " + std::string(to_string(type)));
  }
  return a;
}

Action make_ui_action(ActionType type, const UiElement& element, int streamline_index,
                      std::optional<ScrollDirection> dir) {
  Action a;
  a.type = type;
  a.target = element.id;
  const std::string where = quoted(target_label(element)) + " (" +
                            std::string(to_string(element.role)) + " " +
                            std::to_string(streamline_index) + ")";
  switch (type) {
    case ActionType::Click: a.descriptor = "click " + where; break;
    case ActionType::LongPress: a.descriptor = "long press " + where; break;
    case ActionType::Scroll:
      if (!dir) throw DataError("scroll action needs a direction");
      a.direction = dir;
      a.descriptor = "scroll " + std::string(to_string(*dir)) + " on " + where;
      break;
    case ActionType::TypeText: a.descriptor = "input {content} to " + where; break;
    case ActionType::ClearText: a.descriptor = "clear text in " + where; break;
    default:
      throw DataError("not a UI-dependent action type: " + std::string(to_string(type)));
  }
  return a;
}

ActionSpace extract(const UiState& state, int step) {
  ActionSpace space;
  space.step = step;
  int index = 0;
  for (const auto* e : visible_elements(state)) {
    const int idx = index++;
    if (e->flags.clickable) space.actions.push_back(make_ui_action(ActionType::Click, *e, idx));
    if (e->flags.long_clickable) {
      space.actions.push_back(make_ui_action(ActionType::LongPress, *e, idx));
    }
    if (e->flags.scrollable) {
      if (e->scroll_axis == ScrollAxis::Vertical) {
        space.actions.push_back(make_ui_action(ActionType::Scroll, *e, idx, ScrollDirection::Up));
        space.actions.push_back(
            make_ui_action(ActionType::Scroll, *e, idx, ScrollDirection::Down));
      } else {
        space.actions.push_back(
            make_ui_action(ActionType::Scroll, *e, idx, ScrollDirection::Left));
        space.actions.push_back(
            make_ui_action(ActionType::Scroll, *e, idx, ScrollDirection::Right));
      }
    }
    if (e->flags.editable) {
      space.actions.push_back(make_ui_action(ActionType::TypeText, *e, idx));
      if (!e->text.empty()) {
        space.actions.push_back(make_ui_action(ActionType::ClearText, *e, idx));
      }
    }
  }
  for (auto type : kDefaultActions) space.actions.push_back(make_default_action(type));
  return space;
}

std::vector<Violation> validate(const ActionSpace& space, const UiState& state) {
  std::vector<Violation> out;
  std::unordered_map<int, const UiElement*> visible;
  for (const auto* e : visible_elements(state)) visible.emplace(e->id, e);

  std::set<std::tuple<int, int, int>> seen;
  std::vector<int> default_counts(std::size(kDefaultActions), 0);
  bool in_defaults = false;
  for (std::size_t i = 0; i < space.actions.size(); ++i) {
    const auto& a = space.actions[i];
    const std::string where = "action " + std::to_string(i) + " (" + a.descriptor + ")";
    const auto key = std::make_tuple(static_cast<int>(a.type), a.target.value_or(-1),
                                     a.direction ? static_cast<int>(*a.direction) : -1);
    if (!seen.insert(key).second) out.push_back({"duplicate", where});
    if (a.content) out.push_back({"filled-content", where});

    if (is_default(a.type)) {
      in_defaults = true;
      if (a.target) out.push_back({"bad-target", where + ": default action with a target"});
      const auto pos = std::find(std::begin(kDefaultActions), std::end(kDefaultActions), a.type) -
                       std::begin(kDefaultActions);
      ++default_counts[static_cast<std::size_t>(pos)];
      continue;
    }
    if (in_defaults) out.push_back({"default-order", where + ": UI action after defaults"});
    if (!a.target) {
      out.push_back({"bad-target", where + ": missing target"});
      continue;
    }
    const auto it = visible.find(*a.target);
    if (it == visible.end()) {
      out.push_back({"bad-target", where + ": no visible element " + std::to_string(*a.target)});
      continue;
    }
    if (!licensed(a.type, *it->second)) out.push_back({"unlicensed", where});
    if (a.type == ActionType::Scroll) {
      const bool vertical_dir = a.direction == ScrollDirection::Up ||
                                a.direction == ScrollDirection::Down;
      const bool vertical_axis = it->second->scroll_axis == ScrollAxis::Vertical;
      if (!a.direction || vertical_dir != vertical_axis) {
        out.push_back({"unlicensed", where + ": scroll direction does not match axis"});
      }
    }
  }
  for (std::size_t d = 0; d < default_counts.size(); ++d) {
    if (default_counts[d] != 1) {
      out.push_back({default_counts[d] == 0 ? "missing-default" : "duplicate",
                     std::string(to_string(kDefaultActions[d]))});
    }
  }
  return out;
}

nlohmann::json action_to_json(const Action& a) {
  nlohmann::json j;
  j["type"] = std::string(to_string(a.type));
  j["target"] = a.target ? nlohmann::json(*a.target) : nlohmann::json(nullptr);
  if (a.direction) j["direction"] = std::string(to_string(*a.direction));
  if (a.content) j["content"] = *a.content;
  j["descriptor"] = a.descriptor;
  return j;
}

Action action_from_json(const nlohmann::json& j) {
  Action a;
  const auto name = j.at("type").get<std::string>();
  const auto type = action_type_from_string(name);
  if (!type) throw DataError("unknown action type '" + name + "'");
  a.type = *type;
  if (j.contains("target") && !j["target"].is_null()) a.target = j["target"].get<int>();
  if (j.contains("direction")) {
    a.direction = scroll_direction_from_string(j["direction"].get<std::string>());
    if (!a.direction) throw DataError("unknown scroll direction");
  }
  if (j.contains("content") && !j["content"].is_null()) {
    a.content = j["content"].get<std::string>();
  }
  a.descriptor = j.value("descriptor", "");
  return a;
}

nlohmann::json space_to_json(const ActionSpace& space) {
  auto arr = nlohmann::json::array();
  for (const auto& a : space.actions) arr.push_back(action_to_json(a));
  return {{"step", space.step}, {"actions", arr}};
}

ActionSpace space_from_json(const nlohmann::json& j) {
  ActionSpace space;
  space.step = j.at("step").get<int>();
  for (const auto& a : j.at("actions")) space.actions.push_back(action_from_json(a));
  return space;
}

}  // namespace vagent
