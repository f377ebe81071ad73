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

#ifndef VAGENT_ACTION_SPACE_HPP_
#define VAGENT_ACTION_SPACE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vagent/ui_model.hpp"

namespace vagent {

// Declaration order is the extraction type order.
enum class ActionType {
  Click,
  LongPress,
  Scroll,
  TypeText,
  ClearText,
  OpenApp,
  Wait,
  NavigateHome,
  NavigateBack,
  CompleteTask,
  Answer,
};

enum class ScrollDirection { Up, Down, Left, Right };

inline constexpr ActionType kDefaultActions[] = {
    ActionType::OpenApp,      ActionType::Wait,         ActionType::NavigateHome,
    ActionType::NavigateBack, ActionType::CompleteTask, ActionType::Answer,
};

std::string_view to_string(ActionType type);
std::optional<ActionType> action_type_from_string(std::string_view name);
std::string_view to_string(ScrollDirection dir);
std::optional<ScrollDirection> scroll_direction_from_string(std::string_view name);
ScrollDirection opposite(ScrollDirection dir);

bool is_default(ActionType type);
bool requires_completion(ActionType type);
// Episode ends after the action executes.
bool is_terminal(ActionType type);

inline constexpr std::string_view kContentSlot = "{content}";

struct Action {
  ActionType type = ActionType::Wait;
  std::optional<int> target;
  std::optional<ScrollDirection> direction;
  // Unset until the completion stage fills it.
  std::optional<std::string> content;
  std::string descriptor;

  bool operator==(const Action&) const = default;

  // Identity used for duplicate detection and label matching; ignores the
  // descriptor text and any filled content.
  bool same_choice(const Action& other) const {
    return type == other.type && target == other.target && direction == other.direction;
  }

  // Descriptor with the content slot substituted when content is set.
  std::string rendered() const;
};

struct ActionSpace {
  int step = 0;
  std::vector<Action> actions;

  std::size_t size() const { return actions.size(); }
  bool operator==(const ActionSpace&) const = default;

  // Index of the action matching `a` by same_choice, or -1.
  int index_of(const Action& a) const;
  std::size_t ui_dependent_count() const;
};

// Builds the default (target-less) action of the given type.
Action make_default_action(ActionType type);

// Builds a UI-dependent action on `element`, with the descriptor derived from
// its streamline index.
Action make_ui_action(ActionType type, const UiElement& element, int streamline_index,
                      std::optional<ScrollDirection> dir = std::nullopt);

ActionSpace extract(const UiState& state, int step = 0);

struct Violation {
  std::string kind;  // "bad-target", "unlicensed", "duplicate", "missing-default",
                     // "filled-content", "default-order"
  std::string detail;
};

std::vector<Violation> validate(const ActionSpace& space, const UiState& state);

nlohmann::json action_to_json(const Action& action);
Action action_from_json(const nlohmann::json& j);
nlohmann::json space_to_json(const ActionSpace& space);
ActionSpace space_from_json(const nlohmann::json& j);

}  // namespace vagent

#endif  // VAGENT_ACTION_SPACE_HPP_
